# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.errors import ConfigError, DomainError, TrajectoryTooShort
from echolab.scenario import (
    ArraySpec,
    ScenarioPolicy,
    TalkPattern,
    direction_to_grid_index,
    from_manifest,
    load_manifest,
    sample_scenario,
    save_manifest,
    talker_trajectory,
    to_manifest,
)


@pytest.mark.parametrize("policy", list(ScenarioPolicy))
def test_sample_scenario_geometry(policy):
    for seed in range(5):
        scn = sample_scenario(policy, seed)
        center = np.asarray(scn.array.center)
        assert np.allclose(center, scn.room.dims / 2)
        assert 0.1 <= scn.room.t60_s <= 0.8
        assert -10 <= scn.ser_db <= 10
        assert len(scn.loudspeakers) == 2
        for source in list(scn.loudspeakers) + [s.placement for s in scn.talker_segments]:
            assert scn.room.contains(np.asarray(source.position), margin=0.29)
            assert source.distance_m >= 1.0
        assert scn.loudspeakers[0].direction_deg != scn.loudspeakers[1].direction_deg


def test_sample_scenario_is_deterministic():
    assert to_manifest(sample_scenario("matched", 11)) == to_manifest(sample_scenario("matched", 11))
    assert to_manifest(sample_scenario("matched", 11)) != to_manifest(sample_scenario("matched", 12))


def test_grid_policies():
    for seed in range(10):
        matched = sample_scenario("matched", seed)
        assert all(d % 10 == 0 for d in matched.source_directions())
        fine = sample_scenario("grid_1deg", seed)
        assert all(float(d).is_integer() for d in fine.source_directions())
        assert len(set(fine.source_directions())) == 3


def test_co_directional_talker_shares_a_loudspeaker_direction():
    for seed in range(10):
        scn = sample_scenario("co_directional", seed)
        partner = [ls for ls in scn.loudspeakers if ls.direction_deg == scn.talker.direction_deg]
        assert partner
        assert partner[0].distance_m != scn.talker.distance_m


def test_talker_moves_has_two_segments():
    scn = sample_scenario("talker_moves", 3)
    assert scn.is_moving
    first, second = scn.talker_segments
    assert first.start_s == 0.0 and second.start_s == 3.0
    assert first.placement.direction_deg != second.placement.direction_deg
    assert scn.talker_at(2.99) == first.placement
    assert scn.talker_at(3.0) == second.placement
    loudspeaker_dirs = {ls.direction_deg for ls in scn.loudspeakers}
    assert first.placement.direction_deg not in loudspeaker_dirs


def test_trajectory_needs_time_after_the_switch():
    with pytest.raises(TrajectoryTooShort):
        talker_trajectory("talker_moves", total_s=3.0)
    with pytest.raises(DomainError):
        talker_trajectory("matched")
    assert len(talker_trajectory("talker_moves", total_s=6.0, seed=1)) == 2


def test_fixed_talk_pattern():
    assert sample_scenario("matched", 0, talk_pattern="ST_FE").talk_pattern is TalkPattern.ST_FE
    assert TalkPattern.ST_FE.has_echo and not TalkPattern.ST_FE.has_near_end
    assert TalkPattern.ST_NE.has_near_end and not TalkPattern.ST_NE.has_echo


def test_array_geometry():
    array = ArraySpec()
    offsets = array.mic_offsets
    assert offsets.shape == (6, 3)
    assert np.allclose(np.linalg.norm(offsets, axis=1), 0.035)
    assert np.allclose(offsets[0], [0.035, 0.0, 0.0])
    with pytest.raises(DomainError):
        ArraySpec(num_mics=0)


@given(st.floats(min_value=0.0, max_value=359.999, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_grid_index_is_nearest(direction):
    index = direction_to_grid_index(direction)
    grid = np.arange(36) * 10.0
    diff = np.abs(grid - direction)
    distance = np.minimum(diff, 360 - diff)
    assert distance[index] == distance.min()


def test_grid_index_rejects_out_of_range():
    with pytest.raises(DomainError):
        direction_to_grid_index(360.0)
    with pytest.raises(DomainError):
        direction_to_grid_index(-1.0)
    assert direction_to_grid_index(355.0) == 35
    assert direction_to_grid_index(356.0) == 0


def test_manifest_round_trip(tmp_path):
    scn = sample_scenario("talker_moves", 5)
    path = tmp_path / "scenario.json"
    save_manifest(scn, str(path))
    assert load_manifest(str(path)) == scn
    doc = to_manifest(scn)
    doc["schema"] = "other/0"
    with pytest.raises(ConfigError):
        from_manifest(doc)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_manifest(str(path))
