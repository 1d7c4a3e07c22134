# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as nps

from echolab.acoustics import (
    LoudspeakerModel,
    RenderSettings,
    SPEED_OF_SOUND,
    hard_clip,
    loudspeaker_nonlinearity,
    read_wave,
    reflection_coefficient,
    render_mixture,
    schroeder_t60,
    segment_weights,
    ser,
    simulate_rir,
    speech_surrogate,
    write_wave,
)
from echolab.errors import ConfigError, DomainError
from echolab.scenario import RoomSpec, sample_scenario

FS = 16000


def _render(pattern="DT", seed=0, duration_s=1.0, policy="matched", max_order=4):
    scn = sample_scenario(policy, seed, talk_pattern=pattern, duration_s=duration_s)
    rng = np.random.default_rng(seed)
    far = speech_surrogate(duration_s, FS, rng)
    near = speech_surrogate(duration_s, FS, rng)
    return scn, render_mixture(scn, far, near, settings=RenderSettings(max_order=max_order))


def test_anechoic_direct_tap():
    room = RoomSpec(6.0, 5.0, 4.0, 0.3)
    source, receiver = np.array([1.0, 1.5, 2.0]), np.array([4.2, 3.1, 2.0])
    rir = simulate_rir(room, source, receiver, reflection=0.0)
    expected = np.linalg.norm(source - receiver) / SPEED_OF_SOUND * FS
    assert np.count_nonzero(rir.taps) == 1
    assert abs(int(np.argmax(rir.taps)) - expected) <= 1
    assert math.isclose(rir.taps.max(), 1.0 / (4 * math.pi * rir.distance))


def test_rir_rejects_points_outside_the_room():
    room = RoomSpec(6.0, 5.0, 4.0, 0.3)
    with pytest.raises(DomainError):
        simulate_rir(room, [7.0, 1.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        simulate_rir(room, [1.0, 1.0, 1.0], [1.0, 1.0, 1.0])


@pytest.mark.parametrize("t60", [0.2, 0.5, 0.8])
def test_schroeder_t60_matches_target(t60):
    room = RoomSpec(6.0, 5.0, 4.0, t60)
    rir = simulate_rir(room, [1.7, 1.3, 1.6], [3.1, 2.4, 2.2], max_order=None, length_s=t60)
    estimate = schroeder_t60(rir.taps, FS)
    assert abs(estimate - t60) <= 0.2 * t60


def test_reflection_coefficient():
    room = RoomSpec(6.0, 5.0, 4.0, 0.5)
    assert 0.0 < reflection_coefficient(room) < 1.0
    assert reflection_coefficient(room, "sabine") <= reflection_coefficient(room, "eyring") + 1e-12
    with pytest.raises(DomainError):
        reflection_coefficient(room, "norris")
    with pytest.raises(DomainError):
        reflection_coefficient(RoomSpec(6.0, 5.0, 4.0, 0.0))


def test_hard_clip_level():
    x = np.sign(np.sin(np.linspace(0, 20 * np.pi, 1000)))
    clipped = hard_clip(x, 0.8)
    assert np.max(np.abs(clipped)) <= 0.8 + 1e-12
    with pytest.raises(DomainError):
        hard_clip(x, 0.0)
    with pytest.raises(DomainError):
        hard_clip(np.array([1.0, np.nan]))


@given(nps.arrays(np.float64, st.integers(1, 200), elements=st.floats(-10, 10, allow_subnormal=False)))
@settings(max_examples=100, deadline=None)
def test_loudspeaker_output_is_bounded(x):
    y = loudspeaker_nonlinearity(x)
    assert np.all(np.abs(y) < 1.5)
    assert np.all(np.sign(y) == np.sign(hard_clip(x)))


def test_disabled_loudspeaker_is_identity():
    x = np.linspace(-1, 1, 11)
    assert np.array_equal(LoudspeakerModel(enabled=False)(x), x)


def test_segment_weights_sum_to_one():
    weights = segment_weights([0.0, 0.5], FS, FS, 10.0)
    assert np.allclose(weights.sum(axis=0), 1.0)
    assert weights[0, 0] == 1.0 and weights[1, -1] == 1.0


def test_mixture_is_the_sum_of_its_parts():
    _, render = _render("DT")
    y = render.y.samples
    residual = y - render.echoes.sum(axis=0) - render.s.samples
    assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(y)
    assert np.allclose(render.s.samples, render.s_d.samples + render.s_r.samples)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_realized_ser_matches_scenario(seed):
    scn, render = _render("DT", seed)
    assert abs(render.realized_ser_db - scn.ser_db) < 0.01


def test_talk_patterns_silence_the_absent_party():
    _, far_only = _render("ST_FE")
    assert not np.any(far_only.s.samples)
    assert np.any(far_only.e_sum.samples)
    _, near_only = _render("ST_NE")
    assert not np.any(near_only.e_sum.samples)
    assert ser(near_only.s.samples, near_only.e_sum.samples) == float("inf")


def test_render_rejects_mismatched_inputs():
    scn = sample_scenario("matched", 0, duration_s=1.0)
    with pytest.raises(DomainError):
        render_mixture(scn, np.zeros(FS), np.zeros(FS - 1))
    with pytest.raises(DomainError):
        render_mixture(scn, np.zeros((2, FS)), np.zeros(FS))


def test_moving_talker_render():
    scn, render = _render("ST_NE", seed=4, duration_s=4.0, policy="talker_moves", max_order=2)
    assert scn.is_moving
    assert render.s.samples.shape == (6, 4 * FS)


def test_speech_surrogate_has_pauses():
    x = speech_surrogate(6.0, FS, np.random.default_rng(0))
    assert x.shape == (6 * FS,)
    assert math.isclose(np.max(np.abs(x)), 0.5)
    frames = x[: 6 * FS // 160 * 160].reshape(-1, 160)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    assert np.mean(rms < 1e-3 * rms.max()) > 0.05
    with pytest.raises(DomainError):
        speech_surrogate(0.0)


def test_wave_io(tmp_path):
    x = np.random.default_rng(0).uniform(-0.5, 0.5, (3, 400))
    path = str(tmp_path / "x.wav")
    write_wave(path, x, FS, "float")
    assert np.allclose(read_wave(path), x.astype(np.float32))
    write_wave(path, x[0], FS, "pcm16")
    assert np.allclose(read_wave(path), x[0], atol=1 / 32768)
    with pytest.raises(ConfigError):
        read_wave(path, fs=8000)
    with pytest.raises(ConfigError):
        write_wave(path, x, FS, "mp3")
