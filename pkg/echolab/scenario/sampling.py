# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from echolab.errors import DomainError, TrajectoryTooShort
from echolab.scenario.scenario import (
    ArraySpec,
    RoomSpec,
    Scenario,
    ScenarioPolicy,
    SourceKind,
    SourcePlacement,
    TalkerSegment,
    TalkPattern,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoomBounds:
    """
    Uniform sampling ranges of the default room policy.
    """

    length_m: Tuple[float, float] = (4.0, 8.0)
    width_m: Tuple[float, float] = (3.0, 7.0)
    height_m: Tuple[float, float] = (3.0, 5.0)
    t60_s: Tuple[float, float] = (0.1, 0.8)
    min_distance_m: float = 1.0
    wall_clearance_m: float = 0.3
    ser_db: Tuple[int, int] = (-10, 10)
    num_loudspeakers: int = 2
    switch_s: float = 3.0
    co_directional_gap_m: float = 0.2


DEFAULT_BOUNDS = RoomBounds()


def make_rng(seed: int) -> np.random.Generator:
    """
    Deterministic PCG64 generator for a scenario seed.
    """
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_room(rng: np.random.Generator, bounds: RoomBounds = DEFAULT_BOUNDS) -> RoomSpec:
    return RoomSpec(
        length_m=float(rng.uniform(*bounds.length_m)),
        width_m=float(rng.uniform(*bounds.width_m)),
        height_m=float(rng.uniform(*bounds.height_m)),
        t60_s=float(rng.uniform(*bounds.t60_s)),
    )


def centered_array(room: RoomSpec, num_mics: int = 6, diameter_m: float = 0.07) -> ArraySpec:
    """
    Array placed at the room center.
    """
    center = tuple(float(v) for v in room.dims / 2.0)
    return ArraySpec(num_mics=num_mics, diameter_m=diameter_m, center=center)


def max_source_distance(room: RoomSpec, array: ArraySpec, bounds: RoomBounds = DEFAULT_BOUNDS) -> float:
    """
    Distance from the array center to the nearest wall, minus the wall clearance.
    """
    center = np.asarray(array.center, dtype=float)
    nearest_wall = float(np.min(np.minimum(center, room.dims - center)))
    return nearest_wall - bounds.wall_clearance_m


def _grid_directions(
    rng: np.random.Generator, count: int, resolution_deg: int, excluded: Iterable[float] = ()
) -> np.ndarray:
    slots = np.arange(0, 360, resolution_deg)
    excluded = {int(round(d)) % 360 for d in excluded}
    slots = np.array([s for s in slots if int(s) not in excluded])
    return slots[rng.choice(len(slots), size=count, replace=False)].astype(float)


def _distance(rng: np.random.Generator, low: float, high: float) -> float:
    return float(rng.uniform(low, high))


def _separated_distance(
    rng: np.random.Generator, low: float, high: float, avoid: float, gap: float
) -> float:
    """
    Draw from [low, high] excluding (avoid - gap, avoid + gap); falls back to the farther
    endpoint when nothing is left.
    """
    left = (low, min(high, avoid - gap))
    right = (max(low, avoid + gap), high)
    lengths = [max(0.0, left[1] - left[0]), max(0.0, right[1] - right[0])]
    total = sum(lengths)
    if total <= 0.0:
        return low if abs(low - avoid) >= abs(high - avoid) else high
    u = float(rng.uniform(0.0, total))
    if u < lengths[0]:
        return left[0] + u
    return right[0] + (u - lengths[0])


def _trajectory(
    rng: np.random.Generator,
    array: ArraySpec,
    r_max: float,
    excluded: Sequence[float],
    total_s: float,
    bounds: RoomBounds,
) -> Tuple[TalkerSegment, ...]:
    if total_s <= bounds.switch_s:
        raise TrajectoryTooShort(
            f"A moving talker needs more than {bounds.switch_s} s, got {total_s} s"
        )
    first, second = _grid_directions(rng, 2, 10, excluded)
    center = np.asarray(array.center, dtype=float)
    a = SourcePlacement.around(
        SourceKind.talker, center, first, _distance(rng, bounds.min_distance_m, r_max)
    )
    b = SourcePlacement.around(
        SourceKind.talker, center, second, _distance(rng, bounds.min_distance_m, r_max)
    )
    return (TalkerSegment(0.0, a), TalkerSegment(float(bounds.switch_s), b))


def talker_trajectory(
    policy: Union[ScenarioPolicy, str] = ScenarioPolicy.talker_moves,
    total_s: float = 6.0,
    seed: int = 0,
    room: Optional[RoomSpec] = None,
    array: Optional[ArraySpec] = None,
    excluded_directions: Sequence[float] = (),
    bounds: RoomBounds = DEFAULT_BOUNDS,
) -> Tuple[TalkerSegment, ...]:
    """
    Two-segment talker path: position A for [0, 3) s and position B afterwards.

    :param policy: Must be talker_moves.
    :type policy: Union[ScenarioPolicy, str]
    :param total_s: Utterance duration in seconds. Defaults to 6.0.
    :type total_s: float
    :param seed: Seed of the path. Defaults to 0.
    :type seed: int
    :param room: Room to place the talker in. Defaults to a room sampled from the seed.
    :type room: Optional[RoomSpec]
    :param array: Array whose center the directions refer to. Defaults to the room center.
    :type array: Optional[ArraySpec]
    :param excluded_directions: Directions the talker must not take (e.g. loudspeakers).
    :type excluded_directions: Sequence[float]
    :return: Exactly two contiguous, ordered segments with distinct positions.
    :rtype: Tuple[TalkerSegment, ...]
    :raises TrajectoryTooShort: If total_s does not exceed the switch time.
    """
    if ScenarioPolicy(policy) is not ScenarioPolicy.talker_moves:
        raise DomainError(f"Trajectories exist only for talker_moves, got {policy}")
    if total_s <= bounds.switch_s:
        raise TrajectoryTooShort(
            f"A moving talker needs more than {bounds.switch_s} s, got {total_s} s"
        )
    rng = make_rng(seed)
    room = room or sample_room(rng, bounds)
    array = array or centered_array(room)
    return _trajectory(rng, array, max_source_distance(room, array, bounds), excluded_directions, total_s, bounds)


def sample_scenario(
    policy: Union[ScenarioPolicy, str],
    seed: int,
    talk_pattern: Optional[Union[TalkPattern, str]] = None,
    duration_s: float = 6.0,
    num_mics: int = 6,
    diameter_m: float = 0.07,
    bounds: RoomBounds = DEFAULT_BOUNDS,
) -> Scenario:
    """
    Sample a scene under one of the four policies; a pure function of its arguments.

    :param policy: matched, talker_moves, grid_1deg or co_directional.
    :type policy: Union[ScenarioPolicy, str]
    :param seed: Scenario seed.
    :type seed: int
    :param talk_pattern: Fixed talk pattern, or None to draw it from the seed.
    :type talk_pattern: Optional[Union[TalkPattern, str]]
    :param duration_s: Utterance duration. Defaults to 6.0.
    :type duration_s: float
    :param num_mics: Microphones on the circle. Defaults to 6.
    :type num_mics: int
    :param diameter_m: Array diameter. Defaults to 0.07.
    :type diameter_m: float
    :return: The realized scenario.
    :rtype: Scenario
    """
    policy = ScenarioPolicy(policy)
    rng = make_rng(seed)
    room = sample_room(rng, bounds)
    array = centered_array(room, num_mics, diameter_m)
    center = np.asarray(array.center, dtype=float)
    r_max = max_source_distance(room, array, bounds)
    p = bounds.num_loudspeakers

    if policy is ScenarioPolicy.grid_1deg:
        directions = _grid_directions(rng, p + 1, 1)
    else:
        directions = _grid_directions(rng, p + 1, 10)

    loudspeakers = tuple(
        SourcePlacement.around(
            SourceKind.loudspeaker, center, directions[i], _distance(rng, bounds.min_distance_m, r_max)
        )
        for i in range(p)
    )

    if policy is ScenarioPolicy.co_directional:
        partner = loudspeakers[int(rng.integers(p))]
        distance = _separated_distance(
            rng, bounds.min_distance_m, r_max, partner.distance_m, bounds.co_directional_gap_m
        )
        talker = SourcePlacement.around(SourceKind.talker, center, partner.direction_deg, distance)
        segments = (TalkerSegment(0.0, talker),)
    elif policy is ScenarioPolicy.talker_moves:
        excluded = [ls.direction_deg for ls in loudspeakers]
        segments = _trajectory(rng, array, r_max, excluded, duration_s, bounds)
    else:
        talker = SourcePlacement.around(
            SourceKind.talker, center, directions[p], _distance(rng, bounds.min_distance_m, r_max)
        )
        segments = (TalkerSegment(0.0, talker),)

    ser_db = int(rng.integers(bounds.ser_db[0], bounds.ser_db[1] + 1))
    patterns = list(TalkPattern)
    drawn = patterns[int(rng.integers(len(patterns)))]
    pattern = TalkPattern(talk_pattern) if talk_pattern is not None else drawn

    scenario = Scenario(
        room=room,
        array=array,
        loudspeakers=loudspeakers,
        talker_segments=segments,
        ser_db=ser_db,
        talk_pattern=pattern,
        rng_seed=int(seed),
        policy=policy,
        duration_s=float(duration_s),
    )
    logger.debug(
        "Sampled %s: directions %s, T60 %.2f s, SER %d dB, %s",
        scenario.scenario_id,
        scenario.source_directions(),
        room.t60_s,
        ser_db,
        pattern.value,
    )
    return scenario
