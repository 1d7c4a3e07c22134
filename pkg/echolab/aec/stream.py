# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from typing import Optional

import numpy as np

from echolab.aec.fusion import FusionMode
from echolab.aec.model import DirectionalAec
from echolab.aec.mvdr import OnlineMvdr
from echolab.dsp import StftConfig
from echolab.errors import DomainError, ProtocolError
from echolab.scenario import ArraySpec
from echolab.ssdoa import SsDoaModel


class AecSession:
    """
    Frame-online echo cancellation for one stream.

    The session owns the recurrent state of the AEC network, of the SS-DOA model (modes E, ET,
    ETA) and the MVDR covariance (mode B); the models' parameters are shared and read-only.
    """

    def __init__(
        self,
        model: DirectionalAec,
        ssdoa: Optional[SsDoaModel] = None,
        array: Optional[ArraySpec] = None,
        config: Optional[StftConfig] = None,
        forget: float = 0.98,
    ) -> None:
        """
        Initializes a new AecSession instance.

        :param model: AEC network in eval mode.
        :type model: DirectionalAec
        :param ssdoa: SS-DOA model in eval mode (modes E, ET, ETA).
        :type ssdoa: Optional[SsDoaModel]
        :param array: Array geometry (mode B).
        :type array: Optional[ArraySpec]
        :param config: STFT framing. Defaults to StftConfig().
        :type config: Optional[StftConfig]
        :param forget: MVDR forgetting factor. Defaults to 0.98.
        :type forget: float
        :raises DomainError: If a model is training or the mode's source is missing.
        """
        if model.training or (ssdoa is not None and ssdoa.training):
            raise DomainError("Streaming inference needs models in eval mode")
        mode = model.mode
        if mode.uses_ssdoa and ssdoa is None:
            raise DomainError(f"Fusion mode {mode.value} needs an SS-DOA model")
        if mode is FusionMode.B and array is None:
            raise DomainError("Fusion mode B needs the array geometry")
        self.logger = logging.getLogger(self.__class__.__name__)
        self.model = model
        self.ssdoa = ssdoa if mode.uses_ssdoa else None
        self.state = model.init_state()
        self.ssdoa_state = self.ssdoa.init_state() if self.ssdoa else None
        self.beamformer = OnlineMvdr(array, 0.0, config, forget) if mode is FusionMode.B else None
        self.next_index = 0

    def aux_frame(self, frame: np.ndarray, direction_deg: Optional[float]) -> Optional[np.ndarray]:
        mode = self.model.mode
        if self.ssdoa is not None:
            _, logits_t, embedding, talker = self.ssdoa.step_frame(
                np.asarray(frame, dtype=self.ssdoa.dtype), self.ssdoa_state, record=False
            )
            return {FusionMode.E: embedding, FusionMode.ET: talker, FusionMode.ETA: logits_t}[mode]
        if self.beamformer is not None:
            if direction_deg is None:
                raise DomainError("Fusion mode B needs the talker direction of every frame")
            q = self.beamformer.array.num_mics
            mics = frame[0 : 2 * q : 2] + 1j * frame[1 : 2 * q : 2]
            self.beamformer.steer(direction_deg)
            out = self.beamformer.step(mics)
            return np.stack([np.real(out), np.imag(out)])
        return None

    def push(self, index: int, frame: np.ndarray, direction_deg: Optional[float] = None) -> np.ndarray:
        """
        Process the next (2Q + 2) x F frame.

        :param index: Frame index; must equal the number of frames pushed so far.
        :type index: int
        :param frame: RI-packed microphones and far end of this frame.
        :type frame: np.ndarray
        :param direction_deg: Talker look direction (mode B only).
        :type direction_deg: Optional[float]
        :return: Complex estimate of this frame, F.
        :rtype: np.ndarray
        :raises ProtocolError: If the frame arrives out of order.
        """
        if index != self.next_index:
            raise ProtocolError(f"Expected frame {self.next_index}, got frame {index}")
        aux = self.aux_frame(frame, direction_deg)
        estimate, _ = self.model.step_direction(frame, aux, self.state, record=False)
        self.next_index += 1
        return estimate
