# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from echolab.errors import DomainError


@dataclass(frozen=True)
class LoudspeakerModel:
    """
    Memoryless loudspeaker distortion: hard clipping followed by an asymmetric sigmoid.
    """

    clip_ratio: float = 0.8
    saturation: float = 1.5
    sigmoid_gain_pos: float = 4.0
    sigmoid_gain_neg: float = 0.5
    enabled: bool = True

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if not self.enabled:
            return np.asarray(x, dtype=float).copy()
        return loudspeaker_nonlinearity(
            x, self.clip_ratio, self.sigmoid_gain_pos, self.sigmoid_gain_neg, self.saturation
        )

    def to_dict(self) -> Dict:
        return asdict(self)


def hard_clip(x: np.ndarray, clip_ratio: float = 0.8) -> np.ndarray:
    """
    Clip a signal symmetrically at clip_ratio times its peak magnitude.

    :param x: Input signal.
    :type x: np.ndarray
    :param clip_ratio: Fraction of the peak where clipping starts, in (0, 1].
    :type clip_ratio: float
    :return: Clipped signal.
    :rtype: np.ndarray
    :raises DomainError: If the ratio is out of range or the input is not finite.
    """
    if not 0.0 < clip_ratio <= 1.0:
        raise DomainError(f"clip_ratio must lie in (0, 1], got {clip_ratio}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("Loudspeaker input contains non-finite samples")
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    if peak == 0.0:
        return x.copy()
    level = clip_ratio * peak
    return np.clip(x, -level, level)


def loudspeaker_nonlinearity(
    x: np.ndarray,
    clip_ratio: float = 0.8,
    sigmoid_gain_pos: float = 4.0,
    sigmoid_gain_neg: float = 0.5,
    saturation: float = 1.5,
) -> np.ndarray:
    """
    Hard clip, then b(v) = saturation * (2 / (1 + exp(-a v)) - 1) with slope a depending on
    the sign of v.

    :param x: Far-end signal.
    :type x: np.ndarray
    :param clip_ratio: Clipping threshold relative to the peak. Defaults to 0.8.
    :type clip_ratio: float
    :param sigmoid_gain_pos: Slope a for v > 0. Defaults to 4.0.
    :type sigmoid_gain_pos: float
    :param sigmoid_gain_neg: Slope a for v <= 0. Defaults to 0.5.
    :type sigmoid_gain_neg: float
    :param saturation: Output saturation level. Defaults to 1.5.
    :type saturation: float
    :return: Distorted loudspeaker output, peak below the saturation level.
    :rtype: np.ndarray
    """
    v = hard_clip(x, clip_ratio)
    a = np.where(v > 0.0, sigmoid_gain_pos, sigmoid_gain_neg)
    # tanh(a v / 2) == 2 / (1 + exp(-a v)) - 1
    return saturation * np.tanh(0.5 * a * v)
