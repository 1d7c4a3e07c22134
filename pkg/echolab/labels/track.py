# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from echolab.dsp import StftConfig, frame_signal, num_frames
from echolab.errors import DomainError
from echolab.scenario import Scenario, direction_to_grid_index

logger = logging.getLogger(__name__)

NUM_DIRECTIONS = 36

DirectionSet = Tuple[int, ...]


@dataclass
class DoaLabelTrack:
    """
    Frame-level presence labels on the direction grid.

    Each (frame, direction) pair holds [1, 0] when a source is present and [0, 1] when absent.
    """

    loudspeakers: np.ndarray
    talker: np.ndarray
    config: StftConfig = field(default_factory=StftConfig)

    def __post_init__(self) -> None:
        for name in ("loudspeakers", "talker"):
            part = getattr(self, name)
            if part.ndim != 3 or part.shape[-1] != 2:
                raise DomainError(f"{name} track must be T x D x 2, got {part.shape}")
        if self.loudspeakers.shape != self.talker.shape:
            raise DomainError("Loudspeaker and talker tracks differ in shape")

    @property
    def num_frames(self) -> int:
        return self.loudspeakers.shape[0]

    @property
    def num_directions(self) -> int:
        return self.loudspeakers.shape[1]

    def direction_sets(self) -> Dict[str, List[DirectionSet]]:
        return {
            "loudspeakers": presence_to_sets(presence(self.loudspeakers)),
            "talker": presence_to_sets(presence(self.talker)),
        }


def presence(track_part: np.ndarray) -> np.ndarray:
    """
    Boolean T x D presence matrix of a one-hot track.
    """
    return np.asarray(track_part)[..., 0] == 1


def one_hot(present: np.ndarray) -> np.ndarray:
    present = np.asarray(present, dtype=bool)
    out = np.zeros(present.shape + (2,), dtype=np.uint8)
    out[..., 0] = present
    out[..., 1] = ~present
    return out


def presence_to_sets(present: np.ndarray) -> List[DirectionSet]:
    return [tuple(int(i) for i in np.flatnonzero(row)) for row in present]


def frame_rms(wave: np.ndarray, config: StftConfig) -> np.ndarray:
    """
    RMS of every STFT frame of a mono signal (rectangular window).
    """
    frames = frame_signal(np.asarray(wave, dtype=float)[None, :], config)[0]
    return np.sqrt(np.mean(frames**2, axis=-1))


def activity(
    wave: np.ndarray, config: StftConfig, threshold_db: float = -40.0, floor: float = 1e-6
) -> np.ndarray:
    """
    Per-frame activity of one dry source.

    A frame is active when its RMS exceeds both the floor and threshold_db relative to the
    loudest frame of the utterance.

    :param wave: Mono dry source signal.
    :type wave: np.ndarray
    :param config: Framing shared with the networks.
    :type config: StftConfig
    :param threshold_db: Relative activity threshold. Defaults to -40 dB.
    :type threshold_db: float
    :param floor: Absolute RMS floor. Defaults to 1e-6.
    :type floor: float
    :return: Boolean vector with one entry per frame.
    :rtype: np.ndarray
    """
    rms = frame_rms(wave, config)
    peak = float(rms.max()) if rms.size else 0.0
    return rms > max(peak * 10.0 ** (threshold_db / 20.0), floor)


def make_labels(
    scn: Scenario,
    source_waves: Dict[str, np.ndarray],
    config: StftConfig = None,
    threshold_db: float = -40.0,
    floor: float = 1e-6,
    num_directions: int = NUM_DIRECTIONS,
) -> DoaLabelTrack:
    """
    Build the loudspeaker and talker label tracks of a rendered scenario.

    :param scn: The scenario whose directions are labeled.
    :type scn: Scenario
    :param source_waves: Dry signals: "loudspeakers" (P x N) and "talker" (N).
    :type source_waves: Dict[str, np.ndarray]
    :param config: Framing. Defaults to StftConfig().
    :type config: StftConfig
    :param threshold_db: Relative activity threshold. Defaults to -40 dB.
    :type threshold_db: float
    :param floor: Absolute RMS floor. Defaults to 1e-6.
    :type floor: float
    :param num_directions: Size of the direction grid. Defaults to 36.
    :type num_directions: int
    :return: Label tracks of T frames.
    :rtype: DoaLabelTrack
    :raises DomainError: If the waves are shorter than one frame or differ in length.
    """
    config = config or StftConfig()
    talker = np.asarray(source_waves["talker"], dtype=float)
    loudspeakers = np.atleast_2d(np.asarray(source_waves["loudspeakers"], dtype=float))
    n = talker.shape[-1]
    if n < config.win_length:
        raise DomainError(f"Source waves of {n} samples are shorter than one frame")
    if loudspeakers.size and loudspeakers.shape[-1] != n:
        raise DomainError("Source waves differ in length")
    t = num_frames(n, config)

    speaker_presence = np.zeros((t, num_directions), dtype=bool)
    for wave, placement in zip(loudspeakers, scn.loudspeakers):
        index = direction_to_grid_index(placement.direction_deg, num_directions)
        speaker_presence[:, index] |= activity(wave, config, threshold_db, floor)

    talker_presence = np.zeros((t, num_directions), dtype=bool)
    active = activity(talker, config, threshold_db, floor)
    centers = config.frame_centers(t)
    for frame in np.flatnonzero(active):
        direction = scn.talker_at(float(centers[frame])).direction_deg
        talker_presence[frame, direction_to_grid_index(direction, num_directions)] = True

    logger.debug(
        "Labels for %s: %d frames, %d loudspeaker-active, %d talker-active",
        scn.scenario_id,
        t,
        int(speaker_presence.any(axis=1).sum()),
        int(talker_presence.any(axis=1).sum()),
    )
    return DoaLabelTrack(one_hot(speaker_presence), one_hot(talker_presence), config)


def presence_probabilities(logits: np.ndarray) -> np.ndarray:
    """
    p(present) per (frame, direction) from 2-class logits via the 2-way softmax.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.shape[-1] != 2:
        raise DomainError(f"Expected 2-class logits, got shape {logits.shape}")
    return expit(logits[..., 0] - logits[..., 1])


def decode_predictions(
    logits: np.ndarray, max_sources: int, threshold: float = 0.5
) -> List[DirectionSet]:
    """
    Per-frame direction sets from T x D x 2 logits.

    A direction is present when p(present) exceeds the threshold; when more than max_sources
    pass, the most probable ones are kept, ties going to the lower index.

    :param logits: Network output, T x D x 2 (class 0 is "present").
    :type logits: np.ndarray
    :param max_sources: Largest number of directions per frame.
    :type max_sources: int
    :param threshold: Decision threshold on p(present). Defaults to 0.5.
    :type threshold: float
    :return: One ascending tuple of direction indices per frame.
    :rtype: List[DirectionSet]
    """
    if max_sources < 1:
        raise DomainError(f"max_sources must be positive, got {max_sources}")
    probabilities = presence_probabilities(logits)
    if probabilities.ndim == 1:
        probabilities = probabilities[None, :]
    index = np.arange(probabilities.shape[-1])
    sets: List[DirectionSet] = []
    for row in probabilities:
        passing = index[row > threshold]
        if passing.size > max_sources:
            order = np.lexsort((passing, -row[passing]))
            passing = np.sort(passing[order[:max_sources]])
        sets.append(tuple(int(i) for i in passing))
    return sets


def encode_direction_sets(
    sets: Sequence[Sequence[int]], num_directions: int = NUM_DIRECTIONS
) -> np.ndarray:
    """
    One-hot T x D x 2 rows from per-frame direction sets.
    """
    present = np.zeros((len(sets), num_directions), dtype=bool)
    for frame, directions in enumerate(sets):
        for direction in directions:
            if not 0 <= int(direction) < num_directions:
                raise DomainError(f"Direction index {direction} outside the grid")
            present[frame, int(direction)] = True
    return one_hot(present)
