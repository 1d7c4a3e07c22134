from .metrics import METRIC_CAP_DB, erle, sdr, distortion_projection, presence_matrix, doa_prf
from .report import (
    CSV_COLUMNS,
    METRICS,
    MIXTURE_MODE,
    MetricReport,
    evaluate_utterance,
    reports_frame,
    aggregate,
    format_table,
    write_reports,
    read_reports,
)
from .plots import MODES_ORDER, MODES_LABELS, plot_results
