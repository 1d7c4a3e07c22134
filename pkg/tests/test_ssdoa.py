# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import numpy as np
import pytest

from echolab.errors import ConfigError, DomainError, ProtocolError
from echolab.labels import DoaLabelTrack, encode_direction_sets
from echolab.neuralcore import TrainConfig, Trainer, complexity_report, numeric_gradient, relative_error
from echolab.ssdoa import (
    REFERENCE_MACS_PER_SECOND,
    REFERENCE_PARAMS,
    DoaSample,
    DoaTask,
    SsDoaConfig,
    SsDoaModel,
    StreamSession,
    build_ssdoa,
    frame_f1,
    load_ssdoa,
    stream_infer,
)

TINY = SsDoaConfig(num_mics=2, channels=3, num_bins=5, num_directions=4, dropout=0.0, seed=1)


def _features(config, frames, seed=0):
    return np.random.default_rng(seed).standard_normal((config.in_channels, frames, config.num_bins))


def _sample(config, frames=6, seed=0):
    rng = np.random.default_rng(seed + 100)
    speakers = [tuple(sorted(rng.choice(config.num_directions, 2, replace=False))) for _ in range(frames)]
    talker = [(int(rng.integers(config.num_directions)),) for _ in range(frames)]
    labels = DoaLabelTrack(
        encode_direction_sets(speakers, config.num_directions),
        encode_direction_sets(talker, config.num_directions),
    )
    return DoaSample(f"tiny-{seed}", _features(config, frames, seed), labels)


def test_reference_model_size():
    model = build_ssdoa()
    assert model.count_params() == 92_776
    report = complexity_report(model, targets={"params": REFERENCE_PARAMS, "macs_per_second": REFERENCE_MACS_PER_SECOND})
    assert abs(report["params_ratio"] - 1.0) <= 0.15
    assert abs(report["macs_ratio"] - 1.0) <= 0.25


def test_output_shapes():
    model = SsDoaModel(TINY)
    out = model.forward(_features(TINY, 7))
    assert out.logits_s.shape == (7, 4, 2)
    assert out.logits_t.shape == (7, 4, 2)
    assert out.embedding.shape == (2, 7, 5)
    assert np.array_equal(out.talker_plane, out.embedding[1])


def test_rejects_wrong_input():
    model = SsDoaModel(TINY)
    with pytest.raises(DomainError):
        model.forward(np.zeros((5, 3, TINY.num_bins)))
    with pytest.raises(DomainError):
        model.forward(np.zeros((TINY.in_channels, 3)))
    with pytest.raises(DomainError):
        SsDoaModel(SsDoaConfig(num_mics=1))


def test_future_frames_do_not_change_past_outputs():
    model = SsDoaModel(TINY)
    x = _features(TINY, 10)
    changed = x.copy()
    changed[:, 6:, :] += 5.0
    a, b = model.forward(x), model.forward(changed)
    assert np.array_equal(a.logits_s[:6], b.logits_s[:6])
    assert np.array_equal(a.logits_t[:6], b.logits_t[:6])
    assert not np.allclose(a.logits_t[6:], b.logits_t[6:])


def test_streaming_matches_batch_exactly():
    model = SsDoaModel(TINY)
    x = _features(TINY, 12, seed=3)
    batch = model.forward(x)
    records = stream_infer(model, x)
    assert np.array_equal(np.stack([r.logits_s for r in records]), batch.logits_s)
    assert np.array_equal(np.stack([r.logits_t for r in records]), batch.logits_t)


def test_independent_sessions_share_parameters():
    model = SsDoaModel(TINY)
    x, y = _features(TINY, 5, seed=4), _features(TINY, 5, seed=5)
    first, second = StreamSession(model), StreamSession(model)
    for t in range(5):
        a = first.push(t, x[:, t])
        b = second.push(t, y[:, t])
    assert np.array_equal(a.logits_s, model.forward(x).logits_s[-1])
    assert np.array_equal(b.logits_s, model.forward(y).logits_s[-1])


def test_stream_rejects_out_of_order_frames():
    model = SsDoaModel(TINY)
    session = StreamSession(model)
    session.push(0, _features(TINY, 1)[:, 0])
    with pytest.raises(ProtocolError):
        session.push(2, _features(TINY, 1)[:, 0])
    with pytest.raises(DomainError):
        StreamSession(model.train())


def test_stream_writes_jsonl(tmp_path):
    path = tmp_path / "doa.jsonl"
    records = stream_infer(SsDoaModel(TINY), _features(TINY, 4), jsonl_path=str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == len(records) == 4
    assert all(len(r.talker) <= 1 and len(r.loudspeakers) <= 2 for r in records)


def test_loss_gradient_matches_finite_differences():
    model = SsDoaModel(TINY).astype(np.float64)
    task = DoaTask(model)
    sample = _sample(TINY, frames=4)
    model.zero_grad()
    task.loss(sample, backward=True)
    grads = {name: g.copy() for name, g in model.gradients().items()}
    params = model.parameters()
    for name in ("conv1.weight", "lstm2.w_hh", "ln4.gamma", "proj4.bias", "head_t.weight"):
        numeric = numeric_gradient(lambda: task.loss(sample, backward=False), params[name])
        assert relative_error(grads[name], numeric) < 1e-4, name


def test_checkpoint_round_trip(tmp_path):
    sample = _sample(TINY)
    model = SsDoaModel(TINY)
    trainer = Trainer(DoaTask(model), TrainConfig(epochs=1, batch_size=1), str(tmp_path))
    trainer.fit([sample])
    loaded = load_ssdoa(str(tmp_path / Trainer.LAST))
    assert loaded.config == TINY
    assert np.array_equal(loaded.forward(sample.features).logits_s, model.forward(sample.features).logits_s)


def test_load_rejects_other_checkpoints(tmp_path):
    from echolab.neuralcore import save_checkpoint

    path = str(tmp_path / "other.ckpt")
    save_checkpoint(path, {"w": np.zeros(1)}, {"model": {"name": "iscrn"}})
    with pytest.raises(ConfigError):
        load_ssdoa(path)


@pytest.mark.slow
def test_tiny_model_overfits_a_few_utterances():
    config = SsDoaConfig(num_mics=2, channels=4, num_bins=5, num_directions=4, dropout=0.0, seed=2)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    samples = []
    for s in range(8):
        frames = 8
        labels = DoaLabelTrack(
            encode_direction_sets([pairs[s % 6]] * frames, 4),
            encode_direction_sets([((3 * s) % 4,)] * frames, 4),
        )
        code = np.random.default_rng(50 + s).standard_normal((config.in_channels, 1, config.num_bins))
        x = code + 0.05 * _features(config, frames, seed=s)
        samples.append(DoaSample(f"tiny-{s}", x, labels))
    model = SsDoaModel(config)
    train = TrainConfig(epochs=200, batch_size=2, lr=1e-2, patience=10, early_stop=200)
    history = Trainer(DoaTask(model), train).fit(samples)
    assert all(np.isfinite([r.val_loss for r in history]))
    assert history[-1].val_loss <= 0.2 * history[0].val_loss
    assert frame_f1(model, samples)["f1"] >= 0.9
