# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

MODES_ORDER = ["mixture", "none", "B", "E", "ET", "ETA"]
MODES_LABELS = {"mixture": "Mixture", "none": "ISCRN", "B": "DI_B", "E": "E", "ET": "ET", "ETA": "ETA"}


def plot_results(
    table: pd.DataFrame,
    path: str,
    metrics: Sequence[str] = ("sdr_db", "erle_db"),
    modes_order: Sequence[str] = MODES_ORDER,
) -> None:
    """
    Grouped bar chart: one panel per metric, test sets on the x axis, one bar per mode.

    Metrics are averaged over talk patterns where they are defined.

    :param table: Output of aggregate (grouped by test_set, pattern and mode).
    :type table: pd.DataFrame
    :param path: Image file to write.
    :type path: str
    :param metrics: Metric columns to plot. Defaults to SDR and ERLE.
    :type metrics: Sequence[str]
    :param modes_order: Order of the bars. Defaults to MODES_ORDER.
    :type modes_order: Sequence[str]
    """
    test_sets = sorted(table["test_set"].unique())
    modes = [mode for mode in modes_order if mode in set(table["mode"])]
    fig, axes = plt.subplots(1, len(metrics), dpi=150, figsize=(4.0 * len(metrics), 3.5), squeeze=False)
    width = 0.8 / max(1, len(modes))
    positions = np.arange(len(test_sets))
    for ax, metric in zip(axes[0], metrics):
        means = table.groupby(["test_set", "mode"])[metric].mean()
        for index, mode in enumerate(modes):
            values = [means.get((test_set, mode), np.nan) for test_set in test_sets]
            ax.bar(positions + index * width, values, width, label=MODES_LABELS.get(mode, mode))
        ax.set_xticks(positions + width * (len(modes) - 1) / 2)
        ax.set_xticklabels(test_sets, fontsize=8)
        ax.set_ylabel(metric[:-3].upper() + " (dB)" if metric.endswith("_db") else metric)
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    logger.info("Wrote result plot %s", path)
