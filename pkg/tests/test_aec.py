# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import numpy as np
import pytest

from echolab.aec import (
    AecSample,
    AecSession,
    AecTask,
    DirectionalAec,
    FusionMode,
    IscrnConfig,
    OnlineMvdr,
    beam_planes,
    build_iscrn,
    fuse_direction_info,
    load_aec,
    make_aec_sample,
    mvdr_online,
    steering_vector,
)
from echolab.dsp import SpectroTensor, StftConfig, ri_pack
from echolab.errors import ConfigError, DomainError, ProtocolError
from echolab.neuralcore import Linear, SubbandTimeLstm, TrainConfig, Trainer, numeric_gradient, relative_error
from echolab.scenario import ArraySpec
from echolab.ssdoa import SsDoaConfig, SsDoaModel, SsDoaOutput


def _config(mode="none", num_bins=5, **kwargs):
    return IscrnConfig(
        num_mics=2,
        mode=mode,
        channels=3,
        num_bins=num_bins,
        encoder_blocks=2,
        decoder_blocks=2,
        s4d_state=2,
        num_directions=4,
        **kwargs,
    )


def _ssdoa(num_bins=5):
    return SsDoaModel(SsDoaConfig(num_mics=2, channels=3, num_bins=num_bins, num_directions=4, dropout=0.0))


def _features(frames, num_bins=5, seed=0):
    return np.random.default_rng(seed).standard_normal((6, frames, num_bins))


def _outputs(frames, num_bins=5, directions=4, seed=0):
    rng = np.random.default_rng(seed)
    return SsDoaOutput(
        logits_s=rng.standard_normal((frames, directions, 2)),
        logits_t=rng.standard_normal((frames, directions, 2)),
        embedding=rng.standard_normal((2, frames, num_bins)),
        talker_plane=rng.standard_normal((frames, num_bins)),
    )


@pytest.mark.parametrize("mode,channels", [("none", 6), ("E", 8), ("ET", 7), ("ETA", 7), ("B", 8)])
def test_fusion_channel_counts(mode, channels):
    rng = np.random.default_rng(0)
    x = _features(4)
    fused = fuse_direction_info(
        mode,
        x,
        ssdoa_outputs=_outputs(4),
        projection=Linear("eta_proj", 8, 5, rng),
        beam_ri=rng.standard_normal((2, 4, 5)),
    )
    assert fused.shape == (channels, 4, 5)
    assert np.array_equal(fused[:6], x)
    assert _config(mode).in_channels == channels


def test_fusion_places_the_talker_plane():
    outputs = _outputs(3)
    fused = fuse_direction_info("ET", _features(3), outputs)
    assert np.array_equal(fused[-1], outputs.talker_plane)
    fused = fuse_direction_info("E", _features(3), outputs)
    assert np.array_equal(fused[-2:], outputs.embedding)


def test_fusion_requires_its_source():
    with pytest.raises(DomainError):
        fuse_direction_info("ET", _features(3))
    with pytest.raises(DomainError):
        fuse_direction_info("B", _features(3), _outputs(3))
    with pytest.raises(DomainError):
        fuse_direction_info("ETA", _features(3), _outputs(3))
    with pytest.raises(DomainError):
        fuse_direction_info("ET", _features(3), _outputs(4))


def test_mode_none_ignores_directional_inputs():
    x = _features(3)
    assert fuse_direction_info("none", x, _outputs(3)) is x


def test_build_iscrn_checks_channels():
    model = build_iscrn(7, FusionMode.ET, num_bins=5, channels=3, s4d_state=2, num_directions=4)
    assert model.config.num_mics == 2 and model.mode is FusionMode.ET
    with pytest.raises(DomainError):
        build_iscrn(13, FusionMode.none)
    with pytest.raises(DomainError):
        build_iscrn(8, FusionMode.ET, num_bins=5)
    with pytest.raises(DomainError):
        build_iscrn(4, FusionMode.none, num_bins=5)


def test_every_activation_keeps_all_bins():
    model = DirectionalAec(_config())
    model.forward(_features(3), record=True)
    for layer in model.layers.values():
        axis = 0 if isinstance(layer, SubbandTimeLstm) else -1
        for entry in layer._cache:
            assert entry[0].shape[axis] == 5, layer.name


def test_future_frames_do_not_change_past_estimates():
    model = DirectionalAec(_config())
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = _features(9, seed=int(rng.integers(1000)))
        t0 = int(rng.integers(1, 9))
        changed = x.copy()
        changed[:, t0:, :] += rng.standard_normal(changed[:, t0:, :].shape)
        a = model.run_sequence(x).estimate
        b = model.run_sequence(changed).estimate
        assert np.array_equal(a[:t0], b[:t0])


@pytest.mark.parametrize("mode", ["none", "ET", "ETA", "direct"])
def test_loss_gradient_matches_finite_differences(mode):
    config = _config("none", output="direct") if mode == "direct" else _config(mode)
    model = DirectionalAec(config).astype(np.float64)
    task = AecTask(model, power=0.5)
    rng = np.random.default_rng(2)
    aux = None
    if mode == "ET":
        aux = rng.standard_normal((4, 5))
    elif mode == "ETA":
        aux = rng.standard_normal((4, 4, 2))
    sample = AecSample("x", _features(4), aux, rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5)))
    model.zero_grad()
    task.loss(sample)
    grads = {name: g.copy() for name, g in model.gradients().items()}
    params = model.parameters()
    names = ["conv_e1.weight", "lstm_core.w_ih", "s4d.c_re", "ln_d2.gamma", "conv_out.bias"]
    if mode == "ETA":
        names.append("eta_proj.weight")
    for name in names:
        numeric = numeric_gradient(lambda: task.loss(sample, backward=False), params[name])
        assert relative_error(grads[name], numeric) < 1e-4, name


@pytest.mark.parametrize("mode", ["none", "E", "ET", "ETA"])
def test_streaming_matches_batch(mode):
    ssdoa = _ssdoa()
    model = DirectionalAec(_config(mode))
    x = _features(8, seed=3)
    target = SpectroTensor(np.zeros((1, 8, 5), dtype=complex))
    sample = make_aec_sample("s", x, target, mode, ssdoa if mode != "none" else None)
    batch = model.run_sequence(sample.features, sample.aux).estimate
    session = AecSession(model, ssdoa if mode != "none" else None)
    streamed = np.stack([session.push(t, x[:, t]) for t in range(8)])
    assert np.allclose(streamed, batch, rtol=1e-5, atol=1e-6)


def test_streaming_matches_batch_with_beamformer():
    array = ArraySpec(num_mics=2)
    bins = StftConfig().n_bins
    rng = np.random.default_rng(4)
    mix = SpectroTensor(rng.standard_normal((2, 6, bins)) + 1j * rng.standard_normal((2, 6, bins)))
    far = SpectroTensor(rng.standard_normal((1, 6, bins)) + 0j)
    x = ri_pack([mix, far])
    directions = np.array([30.0, 30.0, 30.0, 90.0, 90.0, 90.0])
    model = DirectionalAec(_config("B", num_bins=bins))
    sample = make_aec_sample("b", x, SpectroTensor(mix.data[:1]), "B", beam_ri=beam_planes(mix, array, directions))
    batch = model.run_sequence(sample.features, sample.aux).estimate
    session = AecSession(model, array=array)
    streamed = np.stack([session.push(t, x[:, t], directions[t]) for t in range(6)])
    assert np.allclose(streamed, batch, rtol=1e-5, atol=1e-6)
    with pytest.raises(DomainError):
        AecSession(model, array=array).push(0, x[:, 0])


def test_session_checks_order_and_sources():
    model = DirectionalAec(_config("ET"))
    with pytest.raises(DomainError):
        AecSession(model)
    with pytest.raises(DomainError):
        AecSession(DirectionalAec(_config("B")))
    session = AecSession(DirectionalAec(_config()))
    with pytest.raises(ProtocolError):
        session.push(1, _features(1)[:, 0])


def test_checkpoint_mode_survives_reload(tmp_path):
    model = DirectionalAec(_config("ETA"))
    rng = np.random.default_rng(5)
    sample = AecSample("x", _features(3), rng.standard_normal((3, 4, 2)), np.zeros((3, 5), dtype=complex))
    Trainer(AecTask(model), TrainConfig(epochs=1, batch_size=1), str(tmp_path)).fit([sample])
    loaded = load_aec(str(tmp_path / Trainer.LAST))
    assert loaded.mode is FusionMode.ETA
    assert np.array_equal(loaded.run_sequence(sample.features, sample.aux).estimate, model.run_sequence(sample.features, sample.aux).estimate)
    with pytest.raises(ConfigError):
        load_aec(str(tmp_path / "missing.ckpt"))


def test_mvdr_is_distortionless():
    array = ArraySpec()
    rng = np.random.default_rng(6)
    bins = StftConfig().n_bins
    beamformer = OnlineMvdr(array, 75.0)
    for _ in range(20):
        beamformer.step(rng.standard_normal((6, bins)) + 1j * rng.standard_normal((6, bins)))
    assert beamformer.distortion() < 1e-8
    assert beamformer.fallbacks == 0


def _plane_waves(array, directions, frames, noise, seed):
    config = StftConfig()
    rng = np.random.default_rng(seed)
    sources = []
    mix = np.zeros((array.num_mics, frames, config.n_bins), dtype=complex)
    for direction in directions:
        s = rng.standard_normal((frames, config.n_bins)) + 1j * rng.standard_normal((frames, config.n_bins))
        d = steering_vector(direction, array, config.frequencies())
        mix += np.transpose(d, (1, 0))[:, None, :] * s[None]
        sources.append(s)
    mix += noise * (rng.standard_normal(mix.shape) + 1j * rng.standard_normal(mix.shape))
    return mix, sources


def test_mvdr_passes_a_single_plane_wave():
    array = ArraySpec()
    mix, (source,) = _plane_waves(array, [40.0], 30, 0.0, 7)
    out = mvdr_online(mix, 40.0, array).data[0]
    assert np.allclose(out, source, rtol=1e-6, atol=1e-6)


def test_mvdr_suppresses_an_interferer():
    array = ArraySpec()
    config = StftConfig()
    mix, (target, interferer) = _plane_waves(array, [0.0, 120.0], 200, 1e-3, 8)
    out = mvdr_online(mix, 0.0, array).data[0]
    band = config.frequencies() >= 1000.0
    residual = (out - target)[50:, band]
    sir = 10 * np.log10(np.sum(np.abs(target[50:, band]) ** 2) / np.sum(np.abs(residual) ** 2))
    assert sir > 5.0


def test_mvdr_rejects_bad_inputs():
    array = ArraySpec()
    with pytest.raises(DomainError):
        mvdr_online(np.zeros((3, 4, 161), dtype=complex), 0.0, array)
    with pytest.raises(DomainError):
        mvdr_online(np.zeros((6, 4, 161), dtype=complex), [0.0, 10.0], array)
    with pytest.raises(DomainError):
        OnlineMvdr(array, 0.0, forget=1.0)


def _toy_scenario(frames=24, seed=9):
    """
    STFT-domain double talk on a 2-mic array with 5 bins: a talker plane wave at 60 degrees plus
    a weak far-end echo through fixed per-bin gains.
    """
    stft = StftConfig(win_ms=1.0, hop_ms=0.5, fs=8000)
    array = ArraySpec(num_mics=2)
    rng = np.random.default_rng(seed)
    shape = (frames, stft.n_bins)
    near = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    far = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    gains = 0.2 * (rng.standard_normal((2, stft.n_bins)) + 1j * rng.standard_normal((2, stft.n_bins)))
    d = steering_vector(60.0, array, stft.frequencies()).T
    mix = SpectroTensor(d[:, None, :] * near[None] + gains[:, None, :] * far[None], stft)
    x = ri_pack([mix, SpectroTensor(far[None], stft)])
    target = SpectroTensor(near[None], stft)
    beam = beam_planes(mix, array, np.full(frames, 60.0))
    return x, target, beam


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["none", "B", "E", "ET", "ETA"])
def test_every_mode_learns_a_toy_scenario(mode):
    x, target, beam = _toy_scenario()
    ssdoa = _ssdoa() if FusionMode(mode).uses_ssdoa else None
    sample = make_aec_sample("toy", x, target, mode, ssdoa, beam if mode == "B" else None)
    config = TrainConfig(epochs=300, batch_size=1, lr=1e-2, patience=20, early_stop=300)
    history = Trainer(AecTask(DirectionalAec(_config(mode))), config).fit([sample])
    losses = [r.val_loss for r in history] + [r.train_loss for r in history]
    assert all(np.isfinite(losses))
    assert history[-1].val_loss <= 0.2 * history[0].val_loss
