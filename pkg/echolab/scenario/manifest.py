# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import logging
from typing import Dict

from echolab.errors import ConfigError
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

SCHEMA = "echolab-scenario/1"

logger = logging.getLogger(__name__)


def _placement_doc(placement: SourcePlacement) -> Dict:
    return {
        "kind": placement.kind.value,
        "direction_deg": placement.direction_deg,
        "distance_m": placement.distance_m,
        "position": list(placement.position),
    }


def _placement(doc: Dict) -> SourcePlacement:
    return SourcePlacement(
        kind=SourceKind(doc["kind"]),
        direction_deg=float(doc["direction_deg"]),
        distance_m=float(doc["distance_m"]),
        position=tuple(float(v) for v in doc["position"]),
    )


def to_manifest(scenario: Scenario) -> Dict:
    """
    Serialize the realized geometry of a scenario; SI units and degrees throughout.

    :param scenario: The scenario to serialize.
    :type scenario: Scenario
    :return: JSON-compatible document tagged with the schema version.
    :rtype: Dict
    """
    room = scenario.room
    array = scenario.array
    return {
        "schema": SCHEMA,
        "id": scenario.scenario_id,
        "policy": scenario.policy.value,
        "rng_seed": scenario.rng_seed,
        "duration_s": scenario.duration_s,
        "room": {
            "length_m": room.length_m,
            "width_m": room.width_m,
            "height_m": room.height_m,
            "t60_s": room.t60_s,
        },
        "array": {
            "num_mics": array.num_mics,
            "diameter_m": array.diameter_m,
            "center": list(array.center),
            "mic_positions": array.mic_positions.tolist(),
        },
        "loudspeakers": [_placement_doc(ls) for ls in scenario.loudspeakers],
        "talker": [
            {"start_s": segment.start_s, **_placement_doc(segment.placement)}
            for segment in scenario.talker_segments
        ],
        "ser_db": scenario.ser_db,
        "talk_pattern": scenario.talk_pattern.value,
    }


def from_manifest(doc: Dict) -> Scenario:
    """
    Rebuild a scenario from its manifest document.

    :param doc: Document produced by to_manifest.
    :type doc: Dict
    :return: The scenario with identical geometry.
    :rtype: Scenario
    :raises ConfigError: If the schema tag is missing or unknown.
    """
    if doc.get("schema") != SCHEMA:
        raise ConfigError(f"Unsupported scenario schema {doc.get('schema')!r}")
    room = RoomSpec(**doc["room"])
    array = ArraySpec(
        num_mics=int(doc["array"]["num_mics"]),
        diameter_m=float(doc["array"]["diameter_m"]),
        center=tuple(float(v) for v in doc["array"]["center"]),
    )
    segments = tuple(
        TalkerSegment(float(item["start_s"]), _placement(item)) for item in doc["talker"]
    )
    return Scenario(
        room=room,
        array=array,
        loudspeakers=tuple(_placement(item) for item in doc["loudspeakers"]),
        talker_segments=segments,
        ser_db=int(doc["ser_db"]),
        talk_pattern=TalkPattern(doc["talk_pattern"]),
        rng_seed=int(doc["rng_seed"]),
        policy=ScenarioPolicy(doc["policy"]),
        duration_s=float(doc["duration_s"]),
    )


def save_manifest(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as file:
        json.dump(to_manifest(scenario), file, ensure_ascii=False, indent=2, sort_keys=True)
    logger.debug("Wrote manifest %s", path)


def load_manifest(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as file:
            return from_manifest(json.load(file))
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise ConfigError(f"Cannot read scenario manifest {path}: {e}") from e
