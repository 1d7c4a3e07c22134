# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, lstsq, solve_toeplitz, toeplitz

from echolab.errors import DomainError

logger = logging.getLogger(__name__)

METRIC_CAP_DB = 100.0


def _energy(x: np.ndarray) -> float:
    return math.fsum(np.square(np.asarray(x, dtype=np.float64)).ravel())


def _capped_ratio_db(numerator: float, denominator: float, name: str, cap: float) -> float:
    if denominator == 0.0 and numerator == 0.0:
        return 0.0
    if denominator == 0.0:
        logger.warning("%s capped at +%.0f dB", name, cap)
        return cap
    if numerator == 0.0:
        logger.warning("%s capped at -%.0f dB", name, cap)
        return -cap
    value = 10.0 * math.log10(numerator / denominator)
    if abs(value) > cap:
        logger.warning("%s of %.1f dB capped at %+.0f dB", name, value, math.copysign(cap, value))
        return math.copysign(cap, value)
    return value


def erle(mixture: np.ndarray, estimate: np.ndarray, cap: float = METRIC_CAP_DB) -> float:
    """
    Echo return loss enhancement 10 log10(sum y^2 / sum s_hat^2) of a far-end single-talk segment.

    :param mixture: Reference microphone signal y_1.
    :type mixture: np.ndarray
    :param estimate: Output of the canceller.
    :type estimate: np.ndarray
    :param cap: Absolute limit of the result in dB. Defaults to 100.
    :type cap: float
    :return: ERLE in dB.
    :rtype: float
    :raises DomainError: If the lengths differ.
    """
    mixture, estimate = np.asarray(mixture).ravel(), np.asarray(estimate).ravel()
    if mixture.shape != estimate.shape:
        raise DomainError(f"ERLE needs equal lengths, got {mixture.size} and {estimate.size}")
    return _capped_ratio_db(_energy(mixture), _energy(estimate), "ERLE", cap)


def _lagged_products(a: np.ndarray, b: np.ndarray, lags: int) -> np.ndarray:
    """
    sum_n a[n] b[n - k] for k = 0 .. lags - 1.
    """
    n = a.size
    return np.array([np.dot(a[k:], b[: n - k]) if k < n else 0.0 for k in range(lags)])


def distortion_projection(reference: np.ndarray, estimate: np.ndarray, filter_len: int = 32) -> np.ndarray:
    """
    Least-squares projection of the estimate onto the reference delayed by 0 .. L - 1 samples.
    """
    r = _lagged_products(reference, reference, filter_len)
    b = _lagged_products(estimate, reference, filter_len)
    try:
        taps = solve_toeplitz(r, b)
    except LinAlgError:
        taps = lstsq(toeplitz(r), b)[0]
    if not np.all(np.isfinite(taps)):
        taps = lstsq(toeplitz(r), b)[0]
    return np.convolve(reference, taps)[: reference.size]


def sdr(reference: np.ndarray, estimate: np.ndarray, filter_len: int = 32, cap: float = METRIC_CAP_DB) -> float:
    """
    Signal-to-distortion ratio with a time-invariant allowed-distortion filter of L taps.

    The target is the projection of the estimate onto the span of the delayed references; the
    remainder is distortion.

    :param reference: Near-end direct path at the reference microphone.
    :type reference: np.ndarray
    :param estimate: Estimate of the same signal.
    :type estimate: np.ndarray
    :param filter_len: Taps L of the distortion filter. Defaults to 32.
    :type filter_len: int
    :param cap: Absolute limit of the result in dB. Defaults to 100.
    :type cap: float
    :return: SDR in dB.
    :rtype: float
    :raises DomainError: If the lengths differ, L < 1 or the reference is zero.
    """
    reference = np.asarray(reference, dtype=np.float64).ravel()
    estimate = np.asarray(estimate, dtype=np.float64).ravel()
    if reference.shape != estimate.shape:
        raise DomainError(f"SDR needs equal lengths, got {reference.size} and {estimate.size}")
    if filter_len < 1:
        raise DomainError(f"Distortion filter needs at least one tap, got {filter_len}")
    if _energy(reference) == 0.0:
        raise DomainError("SDR of a zero reference is undefined")
    target = distortion_projection(reference, estimate, filter_len)
    return _capped_ratio_db(_energy(target), _energy(estimate - target), "SDR", cap)


def presence_matrix(track: np.ndarray) -> np.ndarray:
    """
    Boolean T x D presence from a one-hot T x D x 2 track (class 0 present) or a boolean matrix.
    """
    track = np.asarray(track)
    if track.ndim == 3 and track.shape[-1] == 2:
        return track[..., 0] == 1
    if track.ndim == 2:
        return track.astype(bool)
    raise DomainError(f"Expected a T x D x 2 track or a T x D presence matrix, got {track.shape}")


def doa_prf(predicted: np.ndarray, labels: np.ndarray) -> Tuple[float, float, float]:
    """
    Precision, recall and F1 counted over (frame, direction) pairs.

    Ratios with a zero denominator are 0.

    :param predicted: Predicted track (T x D x 2 one-hot or T x D presence).
    :type predicted: np.ndarray
    :param labels: Label track of the same frames.
    :type labels: np.ndarray
    :return: Precision, recall and F1.
    :rtype: Tuple[float, float, float]
    :raises DomainError: If the tracks are not aligned.
    """
    pred, true = presence_matrix(predicted), presence_matrix(labels)
    if pred.shape != true.shape:
        raise DomainError(f"Predicted {pred.shape} and label {true.shape} tracks are not aligned")
    tp = int(np.count_nonzero(pred & true))
    fp = int(np.count_nonzero(pred & ~true))
    fn = int(np.count_nonzero(~pred & true))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
