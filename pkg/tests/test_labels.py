# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.dsp import StftConfig
from echolab.errors import ConfigError, DomainError
from echolab.labels import (
    DoaLabelTrack,
    activity,
    decode_predictions,
    encode_direction_sets,
    load_labels,
    make_labels,
    one_hot,
    presence,
    presence_probabilities,
    save_labels,
    summary_path,
)
from echolab.scenario import direction_to_grid_index, sample_scenario

CONFIG = StftConfig()
FS = 16000


def _bursts(n, on):
    x = np.zeros(n)
    for start, stop in on:
        x[start:stop] = np.random.default_rng(start).standard_normal(stop - start)
    return x


def test_activity_threshold():
    x = _bursts(FS, [(0, 4000)])
    x[8000:] = 1e-4 * np.random.default_rng(9).standard_normal(FS - 8000)
    active = activity(x, CONFIG, threshold_db=-40.0)
    assert active[:20].all()
    assert not active[60:].any()


def test_labels_follow_source_activity():
    scn = sample_scenario("matched", 2, duration_s=1.0)
    far = _bursts(FS, [(0, 8000)])
    near = _bursts(FS, [(8000, FS)])
    track = make_labels(scn, {"loudspeakers": np.stack([far, far]), "talker": near}, CONFIG)
    assert track.num_frames == 99 and track.num_directions == 36
    speakers, talker = presence(track.loudspeakers), presence(track.talker)
    expected = {direction_to_grid_index(ls.direction_deg) for ls in scn.loudspeakers}
    assert set(np.flatnonzero(speakers[10])) == expected
    assert not speakers[80].any()
    assert np.flatnonzero(talker[80]).tolist() == [direction_to_grid_index(scn.talker.direction_deg)]
    assert not talker[10].any()
    assert np.all(track.talker.sum(axis=-1) == 1)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_labels_ignore_the_source_level(alpha):
    scn = sample_scenario("matched", 4, duration_s=1.0)
    far = _bursts(FS, [(0, 6000), (12000, 14000)])
    far[7000:11000] = 3e-3 * np.random.default_rng(5).standard_normal(4000)
    near = _bursts(FS, [(4000, 10000)])
    waves = {"loudspeakers": np.stack([far, 0.5 * far]), "talker": near}
    scaled = {name: alpha * wave for name, wave in waves.items()}
    original = make_labels(scn, waves, CONFIG)
    rescaled = make_labels(scn, scaled, CONFIG)
    assert np.array_equal(rescaled.loudspeakers, original.loudspeakers)
    assert np.array_equal(rescaled.talker, original.talker)


def test_moving_talker_labels_switch_direction():
    scn = sample_scenario("talker_moves", 1, duration_s=6.0)
    near = np.random.default_rng(0).standard_normal(6 * FS)
    track = make_labels(scn, {"loudspeakers": np.zeros((2, 6 * FS)), "talker": near}, CONFIG)
    talker = presence(track.talker)
    first, second = (direction_to_grid_index(s.placement.direction_deg) for s in scn.talker_segments)
    assert talker[100, first] and not talker[100, second]
    assert talker[400, second] and not talker[400, first]
    assert not presence(track.loudspeakers).any()


def test_make_labels_rejects_short_waves():
    scn = sample_scenario("matched", 0, duration_s=1.0)
    with pytest.raises(DomainError):
        make_labels(scn, {"loudspeakers": np.zeros((2, 100)), "talker": np.zeros(100)})
    with pytest.raises(DomainError):
        make_labels(scn, {"loudspeakers": np.zeros((2, 900)), "talker": np.zeros(1000)})


def test_track_shape_checks():
    with pytest.raises(DomainError):
        DoaLabelTrack(np.zeros((3, 36, 2)), np.zeros((4, 36, 2)))
    with pytest.raises(DomainError):
        DoaLabelTrack(np.zeros((3, 36)), np.zeros((3, 36)))


def test_decode_keeps_the_most_probable():
    logits = np.zeros((1, 6, 2))
    logits[0, :, 0] = [3.0, -3.0, 2.0, 2.0, 5.0, -1.0]
    assert decode_predictions(logits, 2) == [(0, 4)]
    assert decode_predictions(logits, 3) == [(0, 2, 4)]
    assert decode_predictions(logits, 1, threshold=0.99) == [(4,)]
    with pytest.raises(DomainError):
        decode_predictions(logits, 0)


def test_presence_probabilities_is_two_way_softmax():
    logits = np.random.default_rng(0).standard_normal((5, 36, 2))
    expected = np.exp(logits[..., 0]) / np.exp(logits).sum(axis=-1)
    assert np.allclose(presence_probabilities(logits), expected)


@given(st.lists(st.sets(st.integers(0, 35), max_size=3), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_encode_matches_presence(sets):
    encoded = encode_direction_sets([sorted(s) for s in sets])
    assert [set(np.flatnonzero(row)) for row in presence(encoded)] == sets
    assert np.all(encoded.sum(axis=-1) == 1)


def test_sidecar_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    track = DoaLabelTrack(one_hot(rng.random((37, 36)) < 0.1), one_hot(rng.random((37, 36)) < 0.05), CONFIG)
    path = str(tmp_path / "labels.bin")
    save_labels(track, path)
    loaded = load_labels(path)
    assert np.array_equal(loaded.loudspeakers, track.loudspeakers)
    assert np.array_equal(loaded.talker, track.talker)
    assert loaded.config == CONFIG
    with open(summary_path(path), "r", encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["frames"] == 37
    with open(path, "r+b") as f:
        f.truncate(20)
    with pytest.raises(ConfigError):
        load_labels(path)
