# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import logging
from typing import Optional

import numpy as np
import soundfile as sf

from echolab.errors import ConfigError

logger = logging.getLogger(__name__)

SAMPLE_RATE = 16000

SUBTYPES = {"pcm16": "PCM_16", "float": "FLOAT"}


def write_wave(path: str, samples: np.ndarray, fs: int = SAMPLE_RATE, subtype: str = "float") -> None:
    """
    Write a mono (N) or multichannel (channels x N) signal to a WAV file.

    :param path: Output file.
    :type path: str
    :param samples: Signal; channels first.
    :type samples: np.ndarray
    :param fs: Sample rate. Defaults to 16000.
    :type fs: int
    :param subtype: "float" (32-bit float) or "pcm16". Defaults to "float".
    :type subtype: str
    :raises ConfigError: If the subtype is unknown.
    """
    if subtype not in SUBTYPES:
        raise ConfigError(f"Unknown WAV subtype {subtype!r}, expected one of {list(SUBTYPES)}")
    data = np.asarray(samples, dtype=np.float32)
    if data.ndim == 2:
        data = data.T
    if subtype == "pcm16":
        data = np.clip(data, -1.0, 1.0 - 1.0 / 32768)
    sf.write(path, data, fs, subtype=SUBTYPES[subtype])
    logger.debug("Wrote %s (%s, %s)", path, data.shape, subtype)


def read_wave(path: str, fs: Optional[int] = SAMPLE_RATE) -> np.ndarray:
    """
    Read a WAV file as float64, channels first (a mono file gives shape N).

    :param path: Input file.
    :type path: str
    :param fs: Required sample rate, or None to accept any. Defaults to 16000.
    :type fs: Optional[int]
    :return: Signal of shape N or channels x N.
    :rtype: np.ndarray
    :raises ConfigError: If the file cannot be read or its sample rate differs.
    """
    try:
        data, rate = sf.read(path, dtype="float64", always_2d=False)
    except (RuntimeError, OSError) as e:
        raise ConfigError(f"Cannot read WAV file {path}: {e}") from e
    if fs is not None and rate != fs:
        raise ConfigError(f"{path} has sample rate {rate}, expected {fs}")
    return data.T if data.ndim == 2 else data
