# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from echolab.acoustics.loudspeaker import LoudspeakerModel
from echolab.acoustics.rir import SPEED_OF_SOUND, Rir, simulate_rir
from echolab.errors import DomainError
from echolab.scenario import Scenario

logger = logging.getLogger(__name__)

INFINITE_RATIO = float("inf")

SAMPLE_RATE = 16000


class WaveRole(Enum):
    mixture: str = "y"
    echo: str = "e"
    near_end: str = "s"
    near_end_direct: str = "s_d"
    near_end_reverb: str = "s_r"
    far_end: str = "x"
    far_end_nl: str = "x_nl"


@dataclass
class MultichannelWave:
    """
    Equal-length channels at 16 kHz, tagged with their role in the signal model.
    """

    samples: np.ndarray
    role: WaveRole
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.ndim != 2:
            raise DomainError(f"Expected channels x N samples, got shape {self.samples.shape}")
        if self.sample_rate != SAMPLE_RATE:
            raise DomainError(f"Sample rate is fixed at {SAMPLE_RATE} Hz, got {self.sample_rate}")

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def reference(self) -> np.ndarray:
        return self.samples[0]


@dataclass(frozen=True)
class RenderSettings:
    """
    Knobs of the mixture renderer; all exposed through the experiment configuration.
    """

    fs: int = SAMPLE_RATE
    max_order: Optional[int] = 40
    rir_length_s: Optional[float] = None
    reflection_method: str = "eyring"
    c: float = SPEED_OF_SOUND
    loudspeaker: LoudspeakerModel = field(default_factory=LoudspeakerModel)
    crossfade_ms: float = 10.0
    workers: int = 1


@dataclass
class MixtureRender:
    """
    Everything the renderer produces for one scenario.

    echoes holds the per-loudspeaker images e_pq with shape P x Q x N. dry_sources holds the
    pre-RIR signals: "loudspeakers" (P x N, after the nonlinearity) and "talker" (N, after SER
    scaling).
    """

    y: MultichannelWave
    e_sum: MultichannelWave
    s: MultichannelWave
    s_d: MultichannelWave
    s_r: MultichannelWave
    far_end: MultichannelWave
    x_nl: MultichannelWave
    echoes: np.ndarray
    dry_sources: Dict[str, np.ndarray]
    near_gain: float
    realized_ser_db: float


def energy(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return math.fsum(np.ravel(x * x))


def ser(near: np.ndarray, echo: np.ndarray, ref_channel: int = 0) -> float:
    """
    Signal-to-echo ratio in dB at the reference microphone.

    :param near: Near-end signal, N or Q x N.
    :type near: np.ndarray
    :param echo: Echo signal, same layout.
    :type echo: np.ndarray
    :param ref_channel: Reference microphone for multichannel input. Defaults to 0.
    :type ref_channel: int
    :return: 10 log10(E_near / E_echo), or INFINITE_RATIO when the echo is silent.
    :rtype: float
    """
    near = np.asarray(near, dtype=float)
    echo = np.asarray(echo, dtype=float)
    if near.ndim == 2:
        near = near[ref_channel]
    if echo.ndim == 2:
        echo = echo[ref_channel]
    e_echo = energy(echo)
    if e_echo == 0.0:
        return INFINITE_RATIO
    e_near = energy(near)
    if e_near == 0.0:
        return -INFINITE_RATIO
    return 10.0 * math.log10(e_near / e_echo)


def segment_weights(starts_s: Sequence[float], n: int, fs: int, crossfade_ms: float) -> np.ndarray:
    """
    Per-segment gains (K x N) that sum to one at every sample, with linear crossfades
    centered on each segment boundary.
    """
    k = len(starts_s)
    weights = np.zeros((k, n))
    fade = int(round(crossfade_ms * fs / 1000.0))
    boundaries = [int(round(s * fs)) for s in starts_s[1:]]
    # membership of every sample in segment k, then smooth the steps
    edges = [0] + boundaries + [n]
    for index in range(k):
        weights[index, edges[index] : edges[index + 1]] = 1.0
    if fade > 0:
        for index, b in enumerate(boundaries):
            lo, hi = max(0, b - fade // 2), min(n, b - fade // 2 + fade)
            if hi <= lo:
                continue
            ramp = (np.arange(lo, hi) - (b - fade // 2) + 0.5) / fade
            weights[index, lo:hi] = 1.0 - ramp
            weights[index + 1, lo:hi] = ramp
    return weights


def _convolve(signal: np.ndarray, taps: np.ndarray, n: int) -> np.ndarray:
    return fftconvolve(signal, taps)[:n]


def _simulate_all(
    jobs: List[Tuple[np.ndarray, np.ndarray, Optional[float]]],
    scn: Scenario,
    settings: RenderSettings,
    max_order: Optional[int],
) -> List[Rir]:
    def run(job: Tuple[np.ndarray, np.ndarray, Optional[float]]) -> Rir:
        source, receiver, reflection = job
        return simulate_rir(
            scn.room,
            source,
            receiver,
            fs=settings.fs,
            max_order=max_order,
            reflection=reflection,
            method=settings.reflection_method,
            length_s=settings.rir_length_s,
            c=settings.c,
        )

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def render_mixture(
    scn: Scenario,
    far_end: np.ndarray,
    near_speech: np.ndarray,
    max_order: Optional[int] = None,
    settings: Optional[RenderSettings] = None,
) -> MixtureRender:
    """
    Render the microphone signals y_q = sum_p h_pq * x_nl_p + s_q of a scenario.

    The near-end image is split into its direct-path part s_d (direct-only RIR) and the
    reverberant remainder s_r = s - s_d. The near-end signal is scaled so that the SER at
    mic 1 equals the scenario's ser_db; the talk pattern silences the absent party.

    :param scn: Realized scenario.
    :type scn: Scenario
    :param far_end: Mono far-end signal x, played by every loudspeaker.
    :type far_end: np.ndarray
    :param near_speech: Mono dry near-end speech.
    :type near_speech: np.ndarray
    :param max_order: Image-method order; overrides the settings when given.
    :type max_order: Optional[int]
    :param settings: Renderer settings. Defaults to RenderSettings().
    :type settings: Optional[RenderSettings]
    :return: All signal components of the mixture model.
    :rtype: MixtureRender
    :raises DomainError: If the inputs are not mono or differ in duration.
    """
    settings = settings or RenderSettings()
    max_order = settings.max_order if max_order is None else max_order
    far_end = np.asarray(far_end, dtype=float)
    near_speech = np.asarray(near_speech, dtype=float)
    if far_end.ndim != 1 or near_speech.ndim != 1:
        raise DomainError("far_end and near_speech must be mono")
    if far_end.shape[0] != near_speech.shape[0]:
        raise DomainError(
            f"Duration mismatch: far end {far_end.shape[0]} vs near end {near_speech.shape[0]} samples"
        )
    n = far_end.shape[0]
    if n == 0:
        raise DomainError("Cannot render an empty mixture")
    pattern = scn.talk_pattern
    mics = scn.array.mic_positions
    q_count = mics.shape[0]
    p_count = len(scn.loudspeakers)
    segments = scn.talker_segments

    jobs: List[Tuple[np.ndarray, np.ndarray, Optional[float]]] = []
    for loudspeaker in scn.loudspeakers:
        jobs.extend((np.asarray(loudspeaker.position), mic, None) for mic in mics)
    for segment in segments:
        position = np.asarray(segment.placement.position)
        jobs.extend((position, mic, None) for mic in mics)
        jobs.extend((position, mic, 0.0) for mic in mics)
    rirs = _simulate_all(jobs, scn, settings, max_order)

    far_active = far_end if pattern.has_echo else np.zeros(n)
    x_nl = np.stack([settings.loudspeaker(far_active) for _ in range(p_count)]) if p_count else np.zeros((0, n))
    echoes = np.zeros((p_count, q_count, n))
    for p in range(p_count):
        for q in range(q_count):
            echoes[p, q] = _convolve(x_nl[p], rirs[p * q_count + q].taps, n)
    e_sum = np.zeros((q_count, n))
    for p in range(p_count):
        e_sum += echoes[p]

    near_active = near_speech if pattern.has_near_end else np.zeros(n)
    weights = segment_weights([seg.start_s for seg in segments], n, settings.fs, settings.crossfade_ms)
    s = np.zeros((q_count, n))
    s_d = np.zeros((q_count, n))
    offset = p_count * q_count
    for k in range(len(segments)):
        for q in range(q_count):
            reverberant = rirs[offset + k * 2 * q_count + q].taps
            direct = rirs[offset + k * 2 * q_count + q_count + q].taps
            s[q] += weights[k] * _convolve(near_active, reverberant, n)
            s_d[q] += weights[k] * _convolve(near_active, direct, n)

    gain = 1.0
    if pattern.has_echo and pattern.has_near_end:
        e_echo, e_near = energy(e_sum[0]), energy(s[0])
        if e_echo > 0.0 and e_near > 0.0:
            gain = math.sqrt(e_echo * 10.0 ** (scn.ser_db / 10.0) / e_near)
    s *= gain
    s_d *= gain
    s_r = s - s_d
    s = s_d + s_r
    y = e_sum + s
    realized = ser(s, e_sum)
    logger.debug(
        "Rendered %s: P=%d Q=%d N=%d, gain %.4f, SER %.3f dB (target %d)",
        scn.scenario_id,
        p_count,
        q_count,
        n,
        gain,
        realized,
        scn.ser_db,
    )
    return MixtureRender(
        y=MultichannelWave(y, WaveRole.mixture, settings.fs),
        e_sum=MultichannelWave(e_sum, WaveRole.echo, settings.fs),
        s=MultichannelWave(s, WaveRole.near_end, settings.fs),
        s_d=MultichannelWave(s_d, WaveRole.near_end_direct, settings.fs),
        s_r=MultichannelWave(s_r, WaveRole.near_end_reverb, settings.fs),
        far_end=MultichannelWave(far_active[None, :], WaveRole.far_end, settings.fs),
        x_nl=MultichannelWave(x_nl if p_count else np.zeros((1, n)), WaveRole.far_end_nl, settings.fs),
        echoes=echoes,
        dry_sources={"loudspeakers": x_nl, "talker": gain * near_active},
        near_gain=gain,
        realized_ser_db=realized,
    )
