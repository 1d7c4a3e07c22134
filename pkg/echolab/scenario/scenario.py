# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from echolab.errors import DomainError

Vector3 = Tuple[float, float, float]


class ScenarioPolicy(Enum):
    """
    Sampling policies: the matched training/test distribution and the three unmatched test sets.
    """

    matched: str = "matched"
    talker_moves: str = "talker_moves"
    grid_1deg: str = "grid_1deg"
    co_directional: str = "co_directional"


class TalkPattern(Enum):
    """
    Which parties are active: double talk, near-end single talk, far-end single talk.
    """

    DT: str = "DT"
    ST_NE: str = "ST_NE"
    ST_FE: str = "ST_FE"

    @property
    def has_echo(self) -> bool:
        return self is not TalkPattern.ST_NE

    @property
    def has_near_end(self) -> bool:
        return self is not TalkPattern.ST_FE


class SourceKind(Enum):
    loudspeaker: str = "loudspeaker"
    talker: str = "talker"


@dataclass(frozen=True)
class RoomSpec:
    """
    Shoebox room with its reverberation time; dimensions in meters along x, y, z.
    """

    length_m: float
    width_m: float
    height_m: float
    t60_s: float

    @property
    def dims(self) -> np.ndarray:
        return np.array([self.length_m, self.width_m, self.height_m])

    @property
    def volume(self) -> float:
        return self.length_m * self.width_m * self.height_m

    @property
    def surface(self) -> float:
        l, w, h = self.length_m, self.width_m, self.height_m
        return 2.0 * (l * w + l * h + w * h)

    def contains(self, point: np.ndarray, margin: float = 0.0) -> bool:
        """
        Check whether a point lies strictly inside the room, at least `margin` from every wall.

        :param point: 3-vector in meters.
        :type point: np.ndarray
        :param margin: Minimum wall clearance in meters. Defaults to 0.0.
        :type margin: float
        :return: True if the point is strictly inside.
        :rtype: bool
        """
        point = np.asarray(point, dtype=float)
        return bool(np.all(point > margin) and np.all(point < self.dims - margin))


@dataclass(frozen=True)
class ArraySpec:
    """
    Uniform circular microphone array in the horizontal plane.

    Mic 1 (the reference) sits at angle 0 degrees, mics follow counter-clockwise.
    """

    num_mics: int = 6
    diameter_m: float = 0.07
    center: Vector3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.num_mics < 1:
            raise DomainError("An array needs at least one microphone")
        if self.diameter_m <= 0:
            raise DomainError("Array diameter must be positive")

    @property
    def mic_angles_deg(self) -> np.ndarray:
        return np.arange(self.num_mics) * 360.0 / self.num_mics

    @property
    def mic_offsets(self) -> np.ndarray:
        """
        Mic positions relative to the array center, Q x 3.
        """
        angles = np.deg2rad(self.mic_angles_deg)
        radius = self.diameter_m / 2.0
        return np.stack(
            [radius * np.cos(angles), radius * np.sin(angles), np.zeros(self.num_mics)], axis=1
        )

    @property
    def mic_positions(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)[None, :] + self.mic_offsets


def unit_vector(direction_deg: float) -> np.ndarray:
    """
    Horizontal unit vector for an azimuth measured counter-clockwise from +x.
    """
    theta = math.radians(direction_deg)
    return np.array([math.cos(theta), math.sin(theta), 0.0])


@dataclass(frozen=True)
class SourcePlacement:
    kind: SourceKind
    direction_deg: float
    distance_m: float
    position: Vector3

    @staticmethod
    def around(
        kind: SourceKind, center: np.ndarray, direction_deg: float, distance_m: float
    ) -> SourcePlacement:
        """
        Place a source at array height along an azimuth from the array center.
        """
        position = np.asarray(center, dtype=float) + distance_m * unit_vector(direction_deg)
        return SourcePlacement(
            kind, float(direction_deg) % 360.0, float(distance_m), tuple(float(v) for v in position)
        )


@dataclass(frozen=True)
class TalkerSegment:
    start_s: float
    placement: SourcePlacement


@dataclass(frozen=True)
class Scenario:
    """
    A fully realized acoustic scene.

    The talker is described by one or more contiguous segments; a static talker has one
    segment starting at 0 s.
    """

    room: RoomSpec
    array: ArraySpec
    loudspeakers: Tuple[SourcePlacement, ...]
    talker_segments: Tuple[TalkerSegment, ...]
    ser_db: int
    talk_pattern: TalkPattern
    rng_seed: int
    policy: ScenarioPolicy = ScenarioPolicy.matched
    duration_s: float = 6.0

    def __post_init__(self) -> None:
        if len(self.talker_segments) == 0:
            raise DomainError("A scenario needs at least one talker segment")
        starts = [segment.start_s for segment in self.talker_segments]
        if starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise DomainError(f"Talker segments must start at 0 s and be ordered: {starts}")

    @property
    def scenario_id(self) -> str:
        return scenario_id(self.policy, self.rng_seed)

    @property
    def talker(self) -> SourcePlacement:
        return self.talker_segments[0].placement

    @property
    def is_moving(self) -> bool:
        return len(self.talker_segments) > 1

    def talker_at(self, time_s: float) -> SourcePlacement:
        """
        Talker placement active at the given time.
        """
        current = self.talker_segments[0].placement
        for segment in self.talker_segments:
            if segment.start_s <= time_s:
                current = segment.placement
        return current

    def source_directions(self) -> Tuple[float, ...]:
        return tuple(ls.direction_deg for ls in self.loudspeakers) + tuple(
            segment.placement.direction_deg for segment in self.talker_segments
        )


def scenario_id(policy: ScenarioPolicy, seed: int) -> str:
    """
    Stable identifier of a sampled scenario.
    """
    return f"{ScenarioPolicy(policy).value}-{int(seed)}"


def direction_to_grid_index(direction_deg: float, num_directions: int = 36) -> int:
    """
    Map an azimuth to the nearest point of the evenly spaced direction grid.

    Grid point k sits at k * 360 / num_directions degrees; distance is circular and ties
    go to the lower index.

    :param direction_deg: Azimuth in [0, 360).
    :type direction_deg: float
    :param num_directions: Grid size. Defaults to 36 (10 degree spacing).
    :type num_directions: int
    :return: Grid index in [0, num_directions).
    :rtype: int
    :raises DomainError: If the direction is outside [0, 360).
    """
    if not (0.0 <= direction_deg < 360.0) or not math.isfinite(direction_deg):
        raise DomainError(f"Direction {direction_deg} outside [0, 360)")
    grid = np.arange(num_directions) * (360.0 / num_directions)
    diff = np.abs(grid - direction_deg)
    distance = np.minimum(diff, 360.0 - diff)
    return int(np.argmin(distance))
