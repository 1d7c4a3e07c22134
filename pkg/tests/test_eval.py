# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import logging
import math

import numpy as np
import pytest
from scipy.signal import lfilter

from echolab.errors import DomainError
from echolab.eval import (
    METRIC_CAP_DB,
    MIXTURE_MODE,
    MetricReport,
    aggregate,
    doa_prf,
    erle,
    evaluate_utterance,
    format_table,
    plot_results,
    read_reports,
    sdr,
    write_reports,
)
from echolab.labels import encode_direction_sets


@pytest.fixture
def speech_like():
    rng = np.random.default_rng(0)
    return lfilter([1.0], [1.0, -0.9], rng.standard_normal(16000))


def test_erle_of_a_fixed_attenuation(speech_like):
    assert math.isclose(erle(speech_like, 0.1 * speech_like), 20.0, abs_tol=1e-9)
    assert math.isclose(erle(speech_like, speech_like), 0.0, abs_tol=1e-12)


def test_erle_caps_and_silence(speech_like, caplog):
    with caplog.at_level(logging.WARNING):
        assert erle(speech_like, np.zeros_like(speech_like)) == METRIC_CAP_DB
    assert "capped" in caplog.text
    assert erle(np.zeros(10), np.zeros(10)) == 0.0
    with pytest.raises(DomainError):
        erle(speech_like, speech_like[:-1])


def test_sdr_with_white_noise(speech_like):
    rng = np.random.default_rng(1)
    noise = rng.standard_normal(speech_like.size)
    noise *= np.sqrt(np.sum(speech_like**2) / np.sum(noise**2)) * 0.1
    value = sdr(speech_like, speech_like + noise)
    assert abs(value - 20.0) < 0.5
    assert math.isclose(sdr(speech_like, 3.0 * (speech_like + noise)), value, rel_tol=1e-9)


def test_sdr_allows_short_filters(speech_like):
    filtered = np.convolve(speech_like, [0.0, 0.5, -0.25, 0.1])[: speech_like.size]
    assert sdr(speech_like, filtered) > 60.0
    assert sdr(speech_like, speech_like) == METRIC_CAP_DB


def test_sdr_preconditions(speech_like):
    with pytest.raises(DomainError):
        sdr(np.zeros(100), np.ones(100))
    with pytest.raises(DomainError):
        sdr(speech_like, speech_like, filter_len=0)
    with pytest.raises(DomainError):
        sdr(speech_like, speech_like[:10])


def test_doa_prf_counts_pairs():
    labels = encode_direction_sets([(1, 4), (2,), ()], 6)
    predicted = encode_direction_sets([(1,), (2, 3), (5,)], 6)
    precision, recall, f1 = doa_prf(predicted, labels)
    assert precision == pytest.approx(2 / 4)
    assert recall == pytest.approx(2 / 3)
    assert f1 == pytest.approx(2 * 0.5 * (2 / 3) / (0.5 + 2 / 3))


def test_doa_prf_empty_tracks_score_zero():
    empty = encode_direction_sets([(), ()], 4)
    assert doa_prf(empty, empty) == (0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        doa_prf(empty, encode_direction_sets([()], 4))


def test_doa_is_scored_per_branch(speech_like):
    talker = encode_direction_sets([(1,), (1,), (2,)], 6)
    speakers = encode_direction_sets([(0, 3), (0, 3), (0, 3)], 6)
    wrong = encode_direction_sets([(1, 4), (2, 5), (1, 4)], 6)
    doa = {"loudspeakers": (wrong, speakers), "talker": (talker.copy(), talker)}
    report = evaluate_utterance("a", "matched", "DT", MIXTURE_MODE, speech_like, speech_like, speech_like, doa=doa)
    assert (report.doa_talker_p, report.doa_talker_r, report.doa_talker_f1) == (1.0, 1.0, 1.0)
    assert (report.doa_ls_p, report.doa_ls_r, report.doa_ls_f1) == (0.0, 0.0, 0.0)
    plain = evaluate_utterance("a", "matched", "DT", "ET", speech_like, speech_like, speech_like)
    assert plain.doa_ls_f1 is None and plain.doa_talker_f1 is None
    with pytest.raises(DomainError):
        evaluate_utterance("a", "matched", "DT", "ET", speech_like, speech_like, speech_like, doa={"both": (talker, talker)})


def test_utterance_metrics_follow_the_pattern(speech_like):
    far_only = evaluate_utterance("a", "co_directional", "ST_FE", "ET", speech_like, 0.5 * speech_like, np.zeros_like(speech_like))
    assert far_only.sdr_db is None and far_only.erle_db == pytest.approx(20 * math.log10(2))
    double = evaluate_utterance("b", "co_directional", "DT", "ET", speech_like, speech_like, speech_like)
    assert double.erle_db is None and double.sdr_db == METRIC_CAP_DB


def _reports():
    reports = []
    for mode, offset in (("none", 0.0), ("ET", 2.0)):
        for index in range(3):
            reports.append(MetricReport(f"s{index}", "same_side", "DT", mode, sdr_db=offset + index))
            reports.append(MetricReport(f"f{index}", "same_side", "ST_FE", mode, erle_db=10.0 + offset))
    return reports


def test_aggregate_means_and_counts(caplog):
    with caplog.at_level(logging.WARNING):
        table = aggregate(_reports(), expected=[("same_side", "ST_NE", "none")])
    assert "ST_NE" in caplog.text
    row = table[(table["mode"] == "ET") & (table["pattern"] == "DT")].iloc[0]
    assert row["count"] == 3 and row["sdr_db"] == pytest.approx(3.0)
    assert math.isnan(row["erle_db"])
    with pytest.raises(DomainError):
        aggregate(_reports(), grouping=["room"])


def test_format_table_lists_every_mode():
    text = format_table(aggregate(_reports()))
    assert "ET" in text and "none" in text
    assert text.endswith("pesq: n/a")
    assert format_table(aggregate([])) == "(no results)"


def test_reports_csv_keeps_missing_metrics(tmp_path):
    path = str(tmp_path / "results.csv")
    write_reports(_reports(), path)
    loaded = read_reports(path)
    assert len(loaded) == 12
    assert loaded[0].erle_db is None and loaded[0].sdr_db == 0.0
    assert loaded[1].erle_db == 10.0


def test_plot_results_writes_an_image(tmp_path):
    path = tmp_path / "plots" / "results.png"
    plot_results(aggregate(_reports()), str(path))
    assert path.exists() and path.stat().st_size > 0


def _loop_energy(x):
    total = 0.0
    for value in x:
        total += float(value) * float(value)
    return total


def _loop_erle(mixture, estimate):
    return 10.0 * math.log10(_loop_energy(mixture) / _loop_energy(estimate))


def _loop_sdr(reference, estimate, filter_len):
    n = reference.size
    lagged = np.zeros((n + filter_len - 1, filter_len))
    for k in range(filter_len):
        for i in range(n):
            lagged[i + k, k] = reference[i]
    padded = np.concatenate([estimate, np.zeros(filter_len - 1)])
    taps = np.linalg.lstsq(lagged, padded, rcond=None)[0]
    target = [sum(taps[k] * lagged[i, k] for k in range(filter_len)) for i in range(n)]
    distortion = [estimate[i] - target[i] for i in range(n)]
    return 10.0 * math.log10(_loop_energy(target) / _loop_energy(distortion))


def _loop_prf(predicted, labels):
    tp = fp = fn = 0
    for t in range(labels.shape[0]):
        for d in range(labels.shape[1]):
            if predicted[t, d] and labels[t, d]:
                tp += 1
            elif predicted[t, d]:
                fp += 1
            elif labels[t, d]:
                fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@pytest.mark.parametrize("case", range(20))
def test_metrics_match_scalar_loops(case):
    rng = np.random.default_rng(100 + case)
    n, filter_len = int(rng.integers(80, 200)), int(rng.integers(1, 6))
    reference = rng.standard_normal(n)
    estimate = np.convolve(reference, rng.standard_normal(3))[:n] + rng.uniform(0.05, 1.0) * rng.standard_normal(n)
    assert erle(reference, estimate) == pytest.approx(_loop_erle(reference, estimate), abs=1e-9)
    assert sdr(reference, estimate, filter_len) == pytest.approx(_loop_sdr(reference, estimate, filter_len), abs=1e-9)
    predicted = rng.random((12, 7)) < 0.3
    labels = rng.random((12, 7)) < 0.3
    assert doa_prf(predicted, labels) == pytest.approx(_loop_prf(predicted, labels), abs=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_sdr_ignores_the_estimate_scale(speech_like, alpha):
    rng = np.random.default_rng(3)
    estimate = speech_like + 0.3 * rng.standard_normal(speech_like.size)
    assert sdr(speech_like, alpha * estimate) == pytest.approx(sdr(speech_like, estimate), abs=1e-9)


def test_scaled_reference_hits_the_cap(speech_like):
    assert sdr(speech_like, 3.0 * speech_like) == METRIC_CAP_DB
