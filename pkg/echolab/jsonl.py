# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import logging
import os
from typing import Dict, List

import numpy as np

logger = logging.getLogger(__name__)


def json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def append_jsonl(path: str, record: Dict) -> None:
    """
    Append one record as a single line; a missing final newline left by an interrupted writer
    is completed first.

    :param path: JSON-lines file, created if needed.
    :type path: str
    :param record: JSON-serializable record (numpy scalars and arrays are converted).
    :type record: Dict
    """
    line = json.dumps(record, default=json_default, sort_keys=True) + "\n"
    prefix = ""
    if os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, "rb") as file:
            file.seek(-1, os.SEEK_END)
            if file.read(1) != b"\n":
                prefix = "\n"
    with open(path, "a", encoding="utf-8") as file:
        file.write(prefix + line)
        file.flush()


def read_jsonl(path: str) -> List[Dict]:
    """
    Read all complete records, skipping lines that do not parse.
    """
    records: List[Dict] = []
    if not os.path.exists(path):
        return records
    with open(path, "r", encoding="utf-8") as file:
        for number, line in enumerate(file, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                logger.warning("Skipping malformed record at %s:%d", path, number)
    return records


def write_jsonl(path: str, records: List[Dict]) -> None:
    """
    Replace the file with the given records; the old content stays in place until the new file
    is complete.
    """
    temp = path + ".tmp"
    with open(temp, "w", encoding="utf-8") as file:
        for record in records:
            file.write(json.dumps(record, default=json_default, sort_keys=True) + "\n")
    os.replace(temp, path)
