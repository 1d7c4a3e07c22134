# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import softmax

from echolab.errors import DomainError
from echolab.neuralcore import Linear
from echolab.ssdoa import SsDoaOutput

logger = logging.getLogger(__name__)


class FusionMode(Enum):
    """
    How directional information enters the AEC network.

    none: plain ISCRN. E: the whole 2 x T x F embedding of the last CR block. ET: only its
    talker plane. ETA: talker logits through a softmax and a learned map to one T x F plane.
    B: the RI planes of an MVDR beam steered at the talker.
    """

    none: str = "none"
    E: str = "E"
    ET: str = "ET"
    ETA: str = "ETA"
    B: str = "B"

    @property
    def extra_channels(self) -> int:
        return {"none": 0, "E": 2, "ET": 1, "ETA": 1, "B": 2}[self.value]

    @property
    def uses_ssdoa(self) -> bool:
        return self in (FusionMode.E, FusionMode.ET, FusionMode.ETA)


def direction_inputs(
    mode: FusionMode,
    ssdoa_outputs: Optional[SsDoaOutput] = None,
    beam_ri: Optional[np.ndarray] = None,
) -> Optional[np.ndarray]:
    """
    Sequence of per-frame auxiliary inputs a mode consumes, frames first.

    E gives T x 2 x F, ET gives T x F, ETA gives the talker logits T x D x 2, B gives
    T x 2 x F and none gives None.

    :raises DomainError: If the mode's source is missing.
    """
    mode = FusionMode(mode)
    if mode is FusionMode.none:
        if ssdoa_outputs is not None or beam_ri is not None:
            logger.warning("Directional inputs supplied to fusion mode none are ignored")
        return None
    if mode is FusionMode.B:
        if beam_ri is None:
            raise DomainError("Fusion mode B needs the beamformer output")
        return np.ascontiguousarray(np.transpose(beam_ri, (1, 0, 2)))
    if ssdoa_outputs is None:
        raise DomainError(f"Fusion mode {mode.value} needs SS-DOA outputs")
    if mode is FusionMode.E:
        return np.ascontiguousarray(np.transpose(ssdoa_outputs.embedding, (1, 0, 2)))
    if mode is FusionMode.ET:
        return np.ascontiguousarray(ssdoa_outputs.talker_plane)
    return np.ascontiguousarray(ssdoa_outputs.logits_t)


def fuse_direction_info(
    mode: FusionMode,
    mic_far_ri: np.ndarray,
    ssdoa_outputs: Optional[SsDoaOutput] = None,
    projection: Optional[Linear] = None,
    beam_ri: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Concatenate directional information to the RI-packed microphone and far-end input.

    :param mode: Fusion mode.
    :type mode: FusionMode
    :param mic_far_ri: (2Q + 2) x T x F network input.
    :type mic_far_ri: np.ndarray
    :param ssdoa_outputs: Outputs of the frozen SS-DOA model (modes E, ET, ETA).
    :type ssdoa_outputs: Optional[SsDoaOutput]
    :param projection: Linear(2D -> F) of mode ETA.
    :type projection: Optional[Linear]
    :param beam_ri: 2 x T x F RI planes of the MVDR output (mode B).
    :type beam_ri: Optional[np.ndarray]
    :return: Fused input with 2Q + 2 + extra channels.
    :rtype: np.ndarray
    :raises DomainError: If a required input is missing or shapes disagree.
    """
    mode = FusionMode(mode)
    aux = direction_inputs(mode, ssdoa_outputs, beam_ri)
    if aux is None:
        return mic_far_ri
    t = mic_far_ri.shape[1]
    if aux.shape[0] != t:
        raise DomainError(f"Directional input has {aux.shape[0]} frames, mixture has {t}")
    if mode is FusionMode.ETA:
        if projection is None:
            raise DomainError("Fusion mode ETA needs its projection layer")
        probabilities = softmax(aux, axis=-1).reshape(t, -1)
        planes = projection.step(probabilities.astype(projection.dtype), None, record=False)[0][None]
    elif aux.ndim == 2:
        planes = aux[None]
    else:
        planes = np.transpose(aux, (1, 0, 2))
    fused = np.concatenate([mic_far_ri, planes.astype(mic_far_ri.dtype)], axis=0)
    assert fused.shape[0] == mic_far_ri.shape[0] + mode.extra_channels, "fusion channel accounting"
    return fused
