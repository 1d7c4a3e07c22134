# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import logging
import os
import struct
from typing import Dict, Optional, Tuple

import numpy as np

from echolab.errors import ConfigError

logger = logging.getLogger(__name__)

FORMAT = "echolab-ckpt/1"


def save_checkpoint(path: str, tensors: Dict[str, np.ndarray], meta: Optional[Dict] = None) -> None:
    """
    Write named tensors as little-endian float32 behind a JSON header.

    Layout: 8-byte little-endian header length, UTF-8 JSON header, raw tensor bytes. The file
    is written next to its destination and renamed into place.

    :param path: Destination file.
    :type path: str
    :param tensors: Named real tensors.
    :type tensors: Dict[str, np.ndarray]
    :param meta: JSON-serializable metadata (model config, epoch, schedule, ...). Defaults to None.
    :type meta: Optional[Dict]
    """
    entries = []
    chunks = []
    offset = 0
    for name in sorted(tensors):
        data = np.ascontiguousarray(tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(data.shape), "offset": offset, "nbytes": data.nbytes})
        chunks.append(data.tobytes())
        offset += data.nbytes
    header = json.dumps({"format": FORMAT, "tensors": entries, "meta": meta or {}}, sort_keys=True)
    encoded = header.encode("utf-8")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as file:
        file.write(struct.pack("<Q", len(encoded)))
        file.write(encoded)
        for chunk in chunks:
            file.write(chunk)
    os.replace(tmp, path)
    logger.debug("Wrote checkpoint %s with %d tensors", path, len(entries))


def load_checkpoint(path: str) -> Tuple[Dict[str, np.ndarray], Dict]:
    """
    Read a checkpoint written by save_checkpoint.

    :param path: Checkpoint file.
    :type path: str
    :return: The named tensors (float32) and the metadata.
    :rtype: Tuple[Dict[str, np.ndarray], Dict]
    :raises ConfigError: If the file is missing, truncated or not a checkpoint.
    """
    try:
        with open(path, "rb") as file:
            (length,) = struct.unpack("<Q", file.read(8))
            header = json.loads(file.read(length).decode("utf-8"))
            payload = file.read()
    except (OSError, struct.error, ValueError) as e:
        raise ConfigError(f"Cannot read checkpoint {path}: {e}") from e
    if header.get("format") != FORMAT:
        raise ConfigError(f"{path} is not an {FORMAT} checkpoint")
    tensors: Dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        start, stop = entry["offset"], entry["offset"] + entry["nbytes"]
        if stop > len(payload):
            raise ConfigError(f"{path} is truncated at tensor {entry['name']}")
        data = np.frombuffer(payload[start:stop], dtype="<f4").reshape(entry["shape"])
        tensors[entry["name"]] = data.astype(np.float32)
    return tensors, header.get("meta", {})
