# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from echolab.errors import DomainError
from echolab.scenario import RoomSpec

logger = logging.getLogger(__name__)

SPEED_OF_SOUND = 343.0


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def reflection_coefficient(
    room: RoomSpec, method: str = "eyring", c: float = SPEED_OF_SOUND
) -> float:
    """
    Uniform pressure reflection coefficient that yields the room's T60.

    :param room: Room with its target reverberation time.
    :type room: RoomSpec
    :param method: "eyring" (default) or "sabine" inversion.
    :type method: str
    :param c: Speed of sound in m/s. Defaults to 343.
    :type c: float
    :return: Reflection coefficient beta in [0, 1).
    :rtype: float
    :raises DomainError: If T60 is not positive or the method is unknown.
    """
    if room.t60_s <= 0:
        raise DomainError(f"T60 must be positive, got {room.t60_s}")
    k = 24.0 * math.log(10.0) / c
    ratio = k * room.volume / (room.surface * room.t60_s)
    if method == "eyring":
        alpha = 1.0 - math.exp(-ratio)
    elif method == "sabine":
        alpha = min(1.0, ratio)
    else:
        raise DomainError(f"Unknown reflection method {method!r}")
    return math.sqrt(max(0.0, 1.0 - alpha))


@dataclass
class Rir:
    """
    Room impulse response between one source and one receiver.
    """

    taps: np.ndarray
    sample_rate: int
    source: Tuple[float, float, float]
    receiver: Tuple[float, float, float]
    t60_s: float

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.source, self.receiver)))

    def direct_index(self, c: float = SPEED_OF_SOUND) -> int:
        return int(round_half_up(self.distance / c * self.sample_rate))

    @property
    def energy(self) -> float:
        return float(np.sum(self.taps**2))


def _axis_images(
    length: float, source: float, receiver: float, j_max: int
) -> Tuple[np.ndarray, np.ndarray]:
    j = np.arange(-j_max, j_max + 1)
    deltas, orders = [], []
    for q in (0, 1):
        deltas.append((1 - 2 * q) * source + 2.0 * j * length - receiver)
        orders.append(np.abs(j - q) + np.abs(j))
    return np.concatenate(deltas), np.concatenate(orders)


def simulate_rir(
    room: RoomSpec,
    source: np.ndarray,
    receiver: np.ndarray,
    fs: int = 16000,
    max_order: Optional[int] = 40,
    reflection: Optional[float] = None,
    method: str = "eyring",
    length_s: Optional[float] = None,
    c: float = SPEED_OF_SOUND,
) -> Rir:
    """
    Image-method RIR of a shoebox room with frequency-independent walls.

    Every image contributes an integer-delay tap at round-half-up(d / c * fs) with amplitude
    beta^order / (4 * pi * d). Images are bounded by the reflection order and by the RIR length.

    :param room: Room geometry and T60.
    :type room: RoomSpec
    :param source: Source position, 3-vector in meters.
    :type source: np.ndarray
    :param receiver: Receiver position, 3-vector in meters.
    :type receiver: np.ndarray
    :param fs: Sample rate in Hz. Defaults to 16000.
    :type fs: int
    :param max_order: Maximum total number of wall reflections, None for length-bounded only.
    :type max_order: Optional[int]
    :param reflection: Override of the wall reflection coefficient (0 gives the anechoic response).
    :type reflection: Optional[float]
    :param method: T60 inversion used when no override is given. Defaults to "eyring".
    :type method: str
    :param length_s: RIR length in seconds. Defaults to max(T60, 0.1).
    :type length_s: Optional[float]
    :param c: Speed of sound in m/s. Defaults to 343.
    :type c: float
    :return: The simulated response.
    :rtype: Rir
    :raises DomainError: If a point is not strictly inside the room or source equals receiver.
    """
    source = np.asarray(source, dtype=float)
    receiver = np.asarray(receiver, dtype=float)
    if not room.contains(source):
        raise DomainError(f"Source {source.tolist()} is not strictly inside the room")
    if not room.contains(receiver):
        raise DomainError(f"Receiver {receiver.tolist()} is not strictly inside the room")
    distance = float(np.linalg.norm(source - receiver))
    if distance == 0.0:
        raise DomainError("Source and receiver coincide")
    beta = reflection_coefficient(room, method, c) if reflection is None else float(reflection)

    length_s = length_s if length_s is not None else max(room.t60_s, 0.1)
    direct = int(round_half_up(distance / c * fs))
    n_taps = max(int(math.ceil(length_s * fs)), direct + 2)
    max_dist = n_taps / fs * c

    axes = []
    for axis in range(3):
        length = float(room.dims[axis])
        j_max = int(math.ceil(max_dist / (2.0 * length))) + 1
        if max_order is not None:
            j_max = min(j_max, max_order // 2 + 1)
        axes.append(_axis_images(length, source[axis], receiver[axis], j_max))

    (dx, ox), (dy, oy), (dz, oz) = axes
    dist = np.sqrt(dx[:, None, None] ** 2 + dy[None, :, None] ** 2 + dz[None, None, :] ** 2)
    order = ox[:, None, None] + oy[None, :, None] + oz[None, None, :]
    keep = dist <= max_dist
    if max_order is not None:
        keep &= order <= max_order
    if beta == 0.0:
        keep &= order == 0
    dist = dist[keep]
    order = order[keep]
    index = round_half_up(dist / c * fs)
    inside = index < n_taps
    amplitude = np.power(beta, order[inside]) / (4.0 * math.pi * dist[inside])
    taps = np.bincount(index[inside], weights=amplitude, minlength=n_taps)[:n_taps]
    logger.debug(
        "RIR %s -> %s: %d images, beta %.3f, %d taps",
        source.round(2).tolist(),
        receiver.round(2).tolist(),
        int(inside.sum()),
        beta,
        n_taps,
    )
    return Rir(
        taps=taps,
        sample_rate=fs,
        source=tuple(source.tolist()),
        receiver=tuple(receiver.tolist()),
        t60_s=room.t60_s,
    )


def schroeder_t60(
    taps: np.ndarray, fs: int, decay_range_db: Tuple[float, float] = (-5.0, -25.0)
) -> float:
    """
    Reverberation time from the Schroeder backward-integrated energy decay curve.

    A line is fitted to the decay curve between the two levels and extrapolated to -60 dB.

    :param taps: Impulse response.
    :type taps: np.ndarray
    :param fs: Sample rate in Hz.
    :type fs: int
    :param decay_range_db: Fit range in dB below the total energy. Defaults to (-5, -25).
    :type decay_range_db: Tuple[float, float]
    :return: Estimated T60 in seconds.
    :rtype: float
    :raises DomainError: If the curve never reaches the lower fit level.
    """
    energy = np.asarray(taps, dtype=float) ** 2
    edc = np.cumsum(energy[::-1])[::-1]
    if edc[0] <= 0.0:
        raise DomainError("Impulse response has no energy")
    with np.errstate(divide="ignore"):
        edc_db = 10.0 * np.log10(edc / edc[0])
    upper, lower = decay_range_db
    start = int(np.argmax(edc_db <= upper))
    below = edc_db <= lower
    if not below.any():
        raise DomainError(f"Decay curve does not reach {lower} dB")
    stop = int(np.argmax(below))
    if stop - start < 2:
        raise DomainError("Decay fit range too short")
    t = np.arange(start, stop + 1) / fs
    slope, _ = np.polyfit(t, edc_db[start : stop + 1], 1)
    if slope >= 0:
        raise DomainError("Decay curve is not decreasing")
    return float(-60.0 / slope)
