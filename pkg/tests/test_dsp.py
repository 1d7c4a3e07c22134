# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.acoustics import speech_surrogate
from echolab.dsp import (
    SpectroTensor,
    StftConfig,
    frame_energy_weights,
    istft,
    mic_far_features,
    num_frames,
    ri_pack,
    ri_unpack,
    spectral_energy,
    stft,
)
from echolab.errors import DomainError

CONFIG = StftConfig()


def test_default_framing():
    assert CONFIG.win_length == 320
    assert CONFIG.hop_length == 160
    assert CONFIG.n_bins == 161
    assert CONFIG.frames_per_second == 100.0
    assert np.allclose(CONFIG.frame_centers(2), [0.01, 0.02])


@given(st.integers(min_value=1, max_value=5000))
@settings(max_examples=100, deadline=None)
def test_num_frames_covers_the_signal(n):
    t = num_frames(n, CONFIG)
    assert (t - 1) * CONFIG.hop_length + CONFIG.win_length >= n
    assert t == 1 or (t - 2) * CONFIG.hop_length + CONFIG.win_length < n


@pytest.mark.parametrize("kind", ["noise", "surrogate"])
def test_round_trip_interior(kind):
    rng = np.random.default_rng(1)
    x = rng.standard_normal(16000) if kind == "noise" else speech_surrogate(1.0, 16000, rng)
    y = istft(stft(x, CONFIG), length=x.shape[0])[0]
    inner = slice(CONFIG.win_length, x.shape[0] - CONFIG.win_length)
    assert np.linalg.norm(y[inner] - x[inner]) < 1e-6 * np.linalg.norm(x[inner])


def test_stft_is_causal():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(4000)
    changed = x.copy()
    changed[2000:] += 1.0
    a, b = stft(x).data, stft(changed).data
    last_clean = (2000 - CONFIG.win_length) // CONFIG.hop_length
    assert np.array_equal(a[:, : last_clean + 1], b[:, : last_clean + 1])
    assert not np.array_equal(a[:, last_clean + 2], b[:, last_clean + 2])


def test_stft_rejects_empty_waves():
    with pytest.raises(DomainError):
        stft(np.zeros(0))
    with pytest.raises(DomainError):
        num_frames(0, CONFIG)


def test_istft_rejects_mismatched_config():
    spec = stft(np.ones(1000))
    with pytest.raises(DomainError):
        istft(spec, StftConfig(win_ms=32.0, hop_ms=16.0))


def test_parseval_energy():
    x = np.random.default_rng(3).standard_normal(3200)
    spec = stft(x)
    expected = float(np.sum(x**2 * frame_energy_weights(x.shape[0], CONFIG)))
    assert np.isclose(spectral_energy(spec), expected, rtol=1e-10)


def test_ri_pack_layout():
    data = np.arange(2 * 3 * 4).reshape(2, 3, 4) * (1 + 2j)
    packed = ri_pack([SpectroTensor(data)])
    assert packed.shape == (4, 3, 4)
    assert np.array_equal(packed[0], data[0].real)
    assert np.array_equal(packed[3], data[1].imag)
    assert np.array_equal(ri_unpack(packed).data, data)
    with pytest.raises(DomainError):
        ri_pack([SpectroTensor(data), SpectroTensor(data[:, :2])])
    with pytest.raises(DomainError):
        ri_unpack(packed[:3])


def test_mic_far_features_shape():
    rng = np.random.default_rng(4)
    mixture, far = rng.standard_normal((6, 1600)), rng.standard_normal(1600)
    features, mix_spec = mic_far_features(mixture, far)
    assert features.shape == (14, mix_spec.num_frames, 161)
    assert np.array_equal(features[12], stft(far).data[0].real)
    with pytest.raises(DomainError):
        mic_far_features(mixture, far[:-1])
