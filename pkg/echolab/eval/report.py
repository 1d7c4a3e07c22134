# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from echolab.eval.metrics import doa_prf, erle, sdr
from echolab.errors import DomainError
from echolab.scenario import TalkPattern

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "scenario_id",
    "test_set",
    "pattern",
    "mode",
    "erle_db",
    "sdr_db",
    "doa_ls_p",
    "doa_ls_r",
    "doa_ls_f1",
    "doa_talker_p",
    "doa_talker_r",
    "doa_talker_f1",
]
METRICS = CSV_COLUMNS[4:]
DOA_BRANCHES = {"loudspeakers": "ls", "talker": "talker"}
MIXTURE_MODE = "mixture"


@dataclass
class MetricReport:
    """
    Metrics of one utterance processed by one system.

    erle_db is only set for far-end single talk and sdr_db only when near-end speech is present.
    The DOA scores of the loudspeaker and talker branches are set once per utterance, on the
    mixture row.
    """

    scenario_id: str
    test_set: str
    pattern: str
    mode: str
    erle_db: Optional[float] = None
    sdr_db: Optional[float] = None
    doa_ls_p: Optional[float] = None
    doa_ls_r: Optional[float] = None
    doa_ls_f1: Optional[float] = None
    doa_talker_p: Optional[float] = None
    doa_talker_r: Optional[float] = None
    doa_talker_f1: Optional[float] = None
    filter_len: int = 32
    frames: int = 0
    rtf: Optional[float] = None


def evaluate_utterance(
    scenario_id: str,
    test_set: str,
    pattern: TalkPattern,
    mode: str,
    mixture: np.ndarray,
    estimate: np.ndarray,
    near_direct: np.ndarray,
    filter_len: int = 32,
    doa: Optional[Dict[str, Tuple[np.ndarray, np.ndarray]]] = None,
) -> MetricReport:
    """
    Score one enhanced utterance.

    :param scenario_id: Scenario identifier.
    :type scenario_id: str
    :param test_set: Test-set name (the scenario policy).
    :type test_set: str
    :param pattern: Talk pattern of the scenario.
    :type pattern: TalkPattern
    :param mode: System name (fusion mode or the mixture pseudo-mode).
    :type mode: str
    :param mixture: Reference microphone signal.
    :type mixture: np.ndarray
    :param estimate: Output of the system, same length.
    :type estimate: np.ndarray
    :param near_direct: Near-end direct path at the reference microphone.
    :type near_direct: np.ndarray
    :param filter_len: SDR distortion filter taps. Defaults to 32.
    :type filter_len: int
    :param doa: Predicted and label tracks per branch ("loudspeakers", "talker"), each branch
        scored on its own. Defaults to None.
    :type doa: Optional[Dict[str, Tuple[np.ndarray, np.ndarray]]]
    :return: The report.
    :rtype: MetricReport
    """
    pattern = TalkPattern(pattern)
    report = MetricReport(scenario_id, test_set, pattern.value, mode, filter_len=filter_len)
    if not pattern.has_near_end:
        report.erle_db = erle(mixture, estimate)
    elif np.any(near_direct):
        report.sdr_db = sdr(near_direct, estimate, filter_len)
    for branch, (predicted, labels) in (doa or {}).items():
        if branch not in DOA_BRANCHES:
            raise DomainError(f"Unknown DOA branch {branch!r}")
        prefix = f"doa_{DOA_BRANCHES[branch]}"
        scores = doa_prf(predicted, labels)
        for suffix, value in zip(("p", "r", "f1"), scores):
            setattr(report, f"{prefix}_{suffix}", value)
    return report


def reports_frame(reports: Iterable[MetricReport]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(report) for report in reports])
    if frame.empty:
        return pd.DataFrame(columns=CSV_COLUMNS)
    return frame


def _fmean(values: pd.Series) -> float:
    values = values.dropna()
    return math.fsum(values) / len(values) if len(values) else float("nan")


def aggregate(
    reports: Sequence[MetricReport],
    grouping: Sequence[str] = ("test_set", "pattern", "mode"),
    expected: Optional[Iterable[Tuple]] = None,
) -> pd.DataFrame:
    """
    Per-group means (compensated summation) and counts of the utterance metrics.

    :param reports: Utterance reports.
    :type reports: Sequence[MetricReport]
    :param grouping: Columns to group by. Defaults to (test_set, pattern, mode).
    :type grouping: Sequence[str]
    :param expected: Group keys that should be present; missing ones are omitted with a warning.
    :type expected: Optional[Iterable[Tuple]]
    :return: One row per non-empty group.
    :rtype: pd.DataFrame
    :raises DomainError: If a grouping column is unknown.
    """
    grouping = list(grouping)
    frame = reports_frame(reports)
    unknown = [column for column in grouping if column not in frame.columns]
    if unknown:
        raise DomainError(f"Unknown grouping columns {unknown}")
    if frame.empty:
        logger.warning("No reports to aggregate")
        return pd.DataFrame(columns=grouping + ["count"] + METRICS)
    for column in METRICS:
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    grouped = frame.groupby(grouping, sort=True)
    table = grouped[METRICS].agg(_fmean)
    table.insert(0, "count", grouped.size())
    table = table.reset_index()
    if expected is not None:
        present = {tuple(row) for row in table[grouping].itertuples(index=False)}
        for key in expected:
            key = tuple(key) if isinstance(key, (tuple, list)) else (key,)
            if key not in present:
                logger.warning("Group %s has no reports; omitted", key)
    return table


def format_table(table: pd.DataFrame, metrics: Sequence[str] = ("sdr_db", "erle_db")) -> str:
    """
    Aligned text table: one row per mode, one column per (test set, pattern, metric).

    PESQ is not computed; its column is shown as n/a.
    """
    if table.empty:
        return "(no results)"
    pivot = table.pivot_table(index="mode", columns=["test_set", "pattern"], values=list(metrics), aggfunc="first")
    pivot = pivot.reorder_levels([1, 2, 0], axis=1).sort_index(axis=1)
    text = pivot.to_string(float_format=lambda v: f"{v:.2f}", na_rep="-")
    return text + "\npesq: n/a"


def write_reports(reports: Sequence[MetricReport], path: str) -> None:
    """
    Per-utterance CSV with the columns scenario_id .. doa_talker_f1.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    reports_frame(reports).reindex(columns=CSV_COLUMNS).to_csv(path, index=False)
    logger.info("Wrote %d utterance reports to %s", len(reports), path)


def read_reports(path: str) -> List[MetricReport]:
    frame = pd.read_csv(path)
    records = frame.astype(object).where(frame.notna(), None).to_dict("records")
    return [MetricReport(**{k: v for k, v in record.items() if k in MetricReport.__dataclass_fields__}) for record in records]
