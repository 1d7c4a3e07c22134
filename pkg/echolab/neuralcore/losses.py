# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from typing import Tuple

import numpy as np
from scipy.special import expit

from echolab.errors import DomainError


def bce_with_logits(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean binary cross-entropy between labels and sigmoid(logits), in the stable form
    max(z, 0) - z y + log(1 + exp(-|z|)).

    :param logits: Predicted logits.
    :type logits: np.ndarray
    :param labels: Targets in {0, 1}, same shape.
    :type labels: np.ndarray
    :return: The loss and its gradient with respect to the logits.
    :rtype: Tuple[float, np.ndarray]
    :raises DomainError: If a label is outside {0, 1} or the shapes differ.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if z.shape != y.shape:
        raise DomainError(f"Logits {z.shape} and labels {y.shape} differ in shape")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("BCE labels must be 0 or 1")
    if z.size == 0:
        raise DomainError("BCE over an empty tensor")
    elementwise = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(elementwise.mean())
    grad = (expit(z) - y) / z.size
    return loss, grad.astype(np.asarray(logits).dtype)


def doa_loss(
    logits_s: np.ndarray, logits_t: np.ndarray, labels_s: np.ndarray, labels_t: np.ndarray
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    DOA loss: BCE of the loudspeaker branch plus BCE of the talker branch.

    :return: Total loss and the gradients of both logit tensors.
    :rtype: Tuple[float, np.ndarray, np.ndarray]
    """
    loss_s, grad_s = bce_with_logits(logits_s, labels_s)
    loss_t, grad_t = bce_with_logits(logits_t, labels_t)
    return loss_s + loss_t, grad_s, grad_t


def compress(spec: np.ndarray, power: float) -> np.ndarray:
    """
    |S|^p e^{j angle(S)}, with zero mapped to zero.
    """
    spec = np.asarray(spec)
    magnitude = np.abs(spec)
    scale = np.zeros_like(magnitude)
    nonzero = magnitude > 0.0
    scale[nonzero] = magnitude[nonzero] ** (power - 1.0)
    return spec * scale


def ri_mag_loss(
    estimate: np.ndarray, target: np.ndarray, power: float = 0.5
) -> Tuple[float, np.ndarray]:
    """
    Power-compressed RI loss plus magnitude loss.

    L = sum |S_c - S_hat_c|^2 + sum (|S|^p - |S_hat|^p)^2, summed over (t, f) and averaged over
    any leading batch axis.

    :param estimate: Estimated complex spectrogram S_hat (T x F or B x T x F).
    :type estimate: np.ndarray
    :param target: Target complex spectrogram S, same shape.
    :type target: np.ndarray
    :param power: Compression exponent p in (0, 1]. Defaults to 0.5.
    :type power: float
    :return: The loss and dL/dRe(S_hat) + j dL/dIm(S_hat).
    :rtype: Tuple[float, np.ndarray]
    :raises DomainError: If the shapes differ or p is out of range.
    """
    if not 0.0 < power <= 1.0:
        raise DomainError(f"Compression power must lie in (0, 1], got {power}")
    z = np.asarray(estimate, dtype=np.complex128)
    s = np.asarray(target, dtype=np.complex128)
    if z.shape != s.shape:
        raise DomainError(f"Estimate {z.shape} and target {s.shape} differ in shape")
    if z.ndim < 2:
        raise DomainError("ri_mag_loss expects T x F or B x T x F spectrograms")
    batch = int(np.prod(z.shape[:-2])) if z.ndim > 2 else 1

    r = np.abs(z)
    target_mag = np.abs(s) ** power
    estimate_mag = r**power
    error = compress(z, power) - compress(s, power)
    loss = float((np.sum(np.abs(error) ** 2) + np.sum((target_mag - estimate_mag) ** 2)) / batch)

    grad = np.zeros_like(z)
    nz = r > 0.0
    rn, zn, en = r[nz], z[nz], error[nz]
    grad[nz] = (
        en * (power + 1.0) * rn ** (power - 1.0)
        + np.conj(en) * (power - 1.0) * zn**2 * rn ** (power - 3.0)
        - 2.0 * power * (target_mag[nz] - rn**power) * rn ** (power - 2.0) * zn
    )
    return loss, grad / batch
