# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import numpy as np

from echolab.errors import DomainError


def pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """
    1/f noise obtained by shaping white noise in the frequency domain; unit variance.
    """
    spectrum = np.fft.rfft(rng.standard_normal(n))
    f = np.arange(spectrum.shape[0], dtype=float)
    spectrum[0] = 0.0
    spectrum[1:] /= np.sqrt(f[1:])
    noise = np.fft.irfft(spectrum, n=n)
    std = float(np.std(noise))
    return noise / std if std > 0 else noise


def _pause_gate(
    n: int,
    fs: int,
    rng: np.random.Generator,
    burst_s: tuple,
    pause_s: tuple,
    ramp_s: float,
) -> np.ndarray:
    gate = np.zeros(n)
    position = 0
    talking = bool(rng.integers(2))
    while position < n:
        low, high = burst_s if talking else pause_s
        length = max(1, int(rng.uniform(low, high) * fs))
        if talking:
            gate[position : position + length] = 1.0
        position += length
        talking = not talking
    ramp = max(1, int(ramp_s * fs))
    kernel = np.ones(ramp) / ramp
    return np.convolve(gate, kernel, mode="same")


def speech_surrogate(
    duration_s: float,
    fs: int = 16000,
    rng: np.random.Generator = None,
    syllable_hz: float = 4.0,
    burst_s: tuple = (0.6, 1.8),
    pause_s: tuple = (0.15, 0.6),
    peak: float = 0.5,
) -> np.ndarray:
    """
    Speech-like test signal: pink noise under a syllabic envelope, interrupted by pauses.

    It is not speech. It has enough temporal structure for activity labels and toy training.

    :param duration_s: Length in seconds.
    :type duration_s: float
    :param fs: Sample rate in Hz. Defaults to 16000.
    :type fs: int
    :param rng: Random generator; a fresh default generator is used when None.
    :type rng: np.random.Generator
    :param syllable_hz: Envelope modulation rate. Defaults to 4 Hz.
    :type syllable_hz: float
    :param burst_s: Range of talk burst lengths in seconds.
    :type burst_s: tuple
    :param pause_s: Range of pause lengths in seconds.
    :type pause_s: tuple
    :param peak: Peak amplitude of the result. Defaults to 0.5.
    :type peak: float
    :return: Mono signal of round(duration_s * fs) samples.
    :rtype: np.ndarray
    :raises DomainError: If the duration is not positive.
    """
    n = int(round(duration_s * fs))
    if n <= 0:
        raise DomainError(f"Surrogate duration must be positive, got {duration_s}")
    rng = rng if rng is not None else np.random.default_rng()
    t = np.arange(n) / fs
    phase = rng.uniform(0.0, 2.0 * np.pi)
    rate = syllable_hz * (1.0 + 0.1 * pink_noise(n, rng).clip(-2.0, 2.0) / 2.0)
    envelope = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.cumsum(rate) / fs + phase))
    envelope *= _pause_gate(n, fs, rng, burst_s, pause_s, ramp_s=0.01)
    signal = pink_noise(n, rng) * envelope**1.5
    top = float(np.max(np.abs(signal)))
    if top > 0:
        signal *= peak / top
    return signal
