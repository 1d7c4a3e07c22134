# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from typing import Callable, Dict, Optional

import numpy as np

from echolab.neuralcore.layers import Layer


def numeric_gradient(fn: Callable[[], float], array: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """
    Central finite-difference gradient of a scalar function with respect to an array that the
    function reads; the array is perturbed in place and restored.
    """
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + eps
        plus = fn()
        flat[index] = original - eps
        minus = fn()
        flat[index] = original
        out[index] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """
    ||a - n|| / max(||a|| + ||n||, 1e-12).
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_layer(
    layer: Layer, x: np.ndarray, rng: Optional[np.random.Generator] = None, eps: float = 1e-6
) -> Dict[str, float]:
    """
    Compare a layer's analytic gradients with finite differences in float64.

    The scalar under test is sum(r * layer(x)) for a fixed random r.

    :param layer: Layer to check; converted to float64 in place.
    :type layer: Layer
    :param x: Input sequence, frames first.
    :type x: np.ndarray
    :param rng: Source of the projection r. Defaults to a seeded generator.
    :type rng: Optional[np.random.Generator]
    :param eps: Finite-difference step. Defaults to 1e-6.
    :type eps: float
    :return: Relative error for the input ("input") and every parameter.
    :rtype: Dict[str, float]
    """
    rng = rng or np.random.default_rng(0)
    layer.astype(np.float64)
    x = np.array(x, dtype=np.float64)
    y = layer.forward(x, record=True)
    projection = rng.standard_normal(y.shape)

    def scalar() -> float:
        return float(np.sum(projection * layer.forward(x, record=False)))

    layer.forward(x, record=True)
    layer.zero_grad()
    dx = layer.backward(projection)
    errors = {"input": relative_error(dx, numeric_gradient(scalar, x, eps))}
    analytic = {key: value.copy() for key, value in layer.grads.items()}
    for key, value in layer.params.items():
        errors[key] = relative_error(analytic[key], numeric_gradient(scalar, value, eps))
    return errors
