# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import logging
import os
import struct
from typing import Dict

import numpy as np

from echolab.dsp import StftConfig
from echolab.errors import ConfigError
from echolab.labels.track import DoaLabelTrack, one_hot, presence

logger = logging.getLogger(__name__)

FORMAT = "echolab-labels/1"

BRANCHES = ("loudspeakers", "talker")


def summary_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".json"


def label_summary(track: DoaLabelTrack) -> Dict:
    """
    Human-readable overview of a label track.
    """
    doc = {"format": FORMAT, "frames": track.num_frames, "directions": track.num_directions}
    silent = np.ones(track.num_frames, dtype=bool)
    for branch in BRANCHES:
        present = presence(getattr(track, branch))
        silent &= ~present.any(axis=1)
        doc[branch] = {
            "active_frames": int(present.any(axis=1).sum()),
            "grid_indices": sorted(int(i) for i in np.flatnonzero(present.any(axis=0))),
        }
    doc["silent_frames"] = int(silent.sum())
    doc["stft"] = track.config.to_dict()
    return doc


def save_labels(track: DoaLabelTrack, path: str) -> None:
    """
    Write the bit-packed binary sidecar and its JSON summary next to it.

    The binary layout is an 8-byte little-endian header length, a JSON header and the packed
    presence bits of shape 2 x T x D (loudspeakers first).

    :param track: Labels to store.
    :type track: DoaLabelTrack
    :param path: Binary output path; the summary goes to the same stem with ".json".
    :type path: str
    """
    bits = np.stack([presence(getattr(track, branch)) for branch in BRANCHES])
    header = {
        "format": FORMAT,
        "shape": list(bits.shape),
        "branches": list(BRANCHES),
        "stft": track.config.to_dict(),
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as file:
        file.write(struct.pack("<Q", len(encoded)))
        file.write(encoded)
        file.write(np.packbits(bits.ravel()).tobytes())
    with open(summary_path(path), "w", encoding="utf-8") as file:
        json.dump(label_summary(track), file, indent=2, sort_keys=True)
    logger.debug("Wrote labels %s (%d frames)", path, track.num_frames)


def load_labels(path: str) -> DoaLabelTrack:
    """
    Read a label sidecar written by save_labels.

    :raises ConfigError: If the file is missing, truncated or of another format.
    """
    try:
        with open(path, "rb") as file:
            (length,) = struct.unpack("<Q", file.read(8))
            header = json.loads(file.read(length).decode("utf-8"))
            payload = np.frombuffer(file.read(), dtype=np.uint8)
    except (OSError, struct.error, ValueError) as e:
        raise ConfigError(f"Cannot read label file {path}: {e}") from e
    if header.get("format") != FORMAT:
        raise ConfigError(f"{path} is not an {FORMAT} file")
    shape = tuple(header["shape"])
    count = int(np.prod(shape))
    if payload.size * 8 < count:
        raise ConfigError(f"{path} is truncated")
    bits = np.unpackbits(payload)[:count].astype(bool).reshape(shape)
    return DoaLabelTrack(
        loudspeakers=one_hot(bits[0]),
        talker=one_hot(bits[1]),
        config=StftConfig.from_dict(header["stft"]),
    )
