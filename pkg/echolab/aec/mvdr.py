# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from typing import Optional, Sequence, Union

import numpy as np

from echolab.acoustics import SPEED_OF_SOUND
from echolab.dsp import SpectroTensor, StftConfig
from echolab.errors import DomainError
from echolab.scenario import ArraySpec, Scenario, unit_vector


def steering_vector(
    direction_deg: float, array: ArraySpec, freqs: np.ndarray, c: float = SPEED_OF_SOUND
) -> np.ndarray:
    """
    Far-field plane-wave steering vectors, normalized to the reference microphone.

    d_q(f) = exp(-j 2 pi f tau_q) / d_1(f) with tau_q = -(r_q . u) / c, r_q the mic offset
    from the array center and u the unit vector towards the source.

    :param direction_deg: Look direction (azimuth).
    :type direction_deg: float
    :param array: Microphone array.
    :type array: ArraySpec
    :param freqs: Bin frequencies in Hz.
    :type freqs: np.ndarray
    :param c: Speed of sound. Defaults to 343 m/s.
    :type c: float
    :return: F x Q complex steering vectors (entry 0 is 1).
    :rtype: np.ndarray
    """
    tau = -(array.mic_offsets @ unit_vector(direction_deg)) / c
    d = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float)[:, None] * tau[None, :])
    return d / d[:, :1]


class OnlineMvdr:
    """
    Per-stream MVDR beamformer with a recursively averaged mixture covariance.

    For every frame and bin: R = lambda R + (1 - lambda) y y^H, diagonal loading
    delta = loading * trace(R) / Q, w = R^-1 d / (d^H R^-1 d), output w^H y. Bins whose loaded
    covariance cannot be inverted keep their previous weights (initially d / (d^H d)); such
    events are counted in `fallbacks`.
    """

    def __init__(
        self,
        array: ArraySpec,
        direction_deg: float,
        config: Optional[StftConfig] = None,
        forget: float = 0.98,
        loading: float = 1e-6,
    ) -> None:
        if not 0.0 < forget < 1.0:
            raise DomainError(f"Forgetting factor must lie in (0, 1), got {forget}")
        self.logger = logging.getLogger(self.__class__.__name__)
        self.config = config or StftConfig()
        self.array = array
        self.forget = forget
        self.loading = loading
        self.direction_deg = float(direction_deg)
        self.steering = steering_vector(direction_deg, array, self.config.frequencies())
        q = array.num_mics
        self.covariance = np.zeros((self.steering.shape[0], q, q), dtype=np.complex128)
        norm = np.einsum("fq,fq->f", np.conj(self.steering), self.steering).real
        self.weights = self.steering / norm[:, None]
        self.fallbacks = 0
        self.frames = 0

    def steer(self, direction_deg: float) -> None:
        """
        Change the look direction; the covariance estimate is kept.
        """
        if float(direction_deg) != self.direction_deg:
            self.direction_deg = float(direction_deg)
            self.steering = steering_vector(direction_deg, self.array, self.config.frequencies())

    def step(self, y: np.ndarray) -> np.ndarray:
        """
        Beamform one frame.

        :param y: Microphone spectra of this frame, Q x F.
        :type y: np.ndarray
        :return: Beamformer output, F.
        :rtype: np.ndarray
        """
        y = np.asarray(y, dtype=np.complex128).T
        if y.shape != self.steering.shape:
            raise DomainError(f"Expected frame of shape {self.steering.shape[::-1]}, got {y.T.shape}")
        outer = y[:, :, None] * np.conj(y)[:, None, :]
        self.covariance = self.forget * self.covariance + (1.0 - self.forget) * outer
        q = y.shape[1]
        trace = np.einsum("fqq->f", self.covariance).real
        delta = self.loading * trace / q
        usable = delta > 0.0
        if usable.any():
            loaded = self.covariance[usable] + delta[usable, None, None] * np.eye(q)
            d = self.steering[usable]
            try:
                x = np.linalg.solve(loaded, d[:, :, None])[:, :, 0]
                gain = np.einsum("fq,fq->f", np.conj(d), x)
                ok = np.isfinite(x).all(axis=1) & (np.abs(gain) > 0.0)
                index = np.flatnonzero(usable)
                self.weights[index[ok]] = x[ok] / gain[ok, None]
                self.fallbacks += int((~ok).sum())
            except np.linalg.LinAlgError:
                self.fallbacks += int(usable.sum())
                self.logger.warning("MVDR: singular covariance at frame %d", self.frames)
        self.fallbacks += int((~usable).sum())
        self.frames += 1
        return np.einsum("fq,fq->f", np.conj(self.weights), y)

    def distortion(self) -> float:
        """
        max_f |w^H d - 1| of the current weights.
        """
        response = np.einsum("fq,fq->f", np.conj(self.weights), self.steering)
        return float(np.max(np.abs(response - 1.0)))


def talker_directions(scn: Scenario, num_frames: int, config: Optional[StftConfig] = None) -> np.ndarray:
    """
    Ground-truth talker direction at the center of every frame.
    """
    config = config or StftConfig()
    centers = config.frame_centers(num_frames)
    return np.array([scn.talker_at(float(time_s)).direction_deg for time_s in centers])


def mvdr_online(
    spec: np.ndarray,
    steer_direction_deg: Union[float, Sequence[float]],
    array: ArraySpec,
    forget: float = 0.98,
    config: Optional[StftConfig] = None,
    loading: float = 1e-6,
) -> SpectroTensor:
    """
    Run an online MVDR over a multichannel spectrogram.

    :param spec: Mixture spectrogram, Q x T x F complex (or a SpectroTensor).
    :type spec: np.ndarray
    :param steer_direction_deg: Look direction, fixed or one per frame.
    :type steer_direction_deg: Union[float, Sequence[float]]
    :param array: Array geometry.
    :type array: ArraySpec
    :param forget: Covariance forgetting factor. Defaults to 0.98.
    :type forget: float
    :param config: STFT framing of the spectrogram. Defaults to StftConfig().
    :type config: Optional[StftConfig]
    :param loading: Relative diagonal loading. Defaults to 1e-6.
    :type loading: float
    :return: Single-channel output, 1 x T x F.
    :rtype: SpectroTensor
    :raises DomainError: If the spectrogram does not match the array or the directions.
    """
    config = config or StftConfig()
    spec = spec.data if isinstance(spec, SpectroTensor) else np.asarray(spec)
    if spec.ndim != 3 or spec.shape[0] != array.num_mics:
        raise DomainError(f"Expected {array.num_mics} x T x F spectrogram, got {spec.shape}")
    t = spec.shape[1]
    directions = np.asarray(steer_direction_deg, dtype=float)
    if directions.ndim == 0:
        directions = np.full(t, float(directions))
    if directions.shape != (t,):
        raise DomainError(f"Need one look direction or {t}, got {np.shape(steer_direction_deg)}")
    beamformer = OnlineMvdr(array, directions[0] if t else 0.0, config, forget, loading)
    out = np.zeros((t, spec.shape[2]), dtype=np.complex128)
    for frame in range(t):
        beamformer.steer(directions[frame])
        out[frame] = beamformer.step(spec[:, frame, :])
    if beamformer.fallbacks:
        beamformer.logger.warning("MVDR kept previous weights %d times", beamformer.fallbacks)
    return SpectroTensor(out[None], config)
