# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
from dataclasses import dataclass
from typing import Optional

import numpy as np

from echolab.aec.fusion import FusionMode, direction_inputs
from echolab.aec.model import AecOutput, DirectionalAec
from echolab.aec.mvdr import mvdr_online
from echolab.dsp import SpectroTensor, StftConfig, ri_pack
from echolab.errors import DomainError
from echolab.neuralcore import TrainingTask, ri_mag_loss
from echolab.scenario import ArraySpec
from echolab.ssdoa import SsDoaModel


@dataclass
class AecSample:
    """
    One utterance for the AEC: microphone and far-end input, the mode's auxiliary sequence
    (frames first, None for mode none) and the target spectrum of the near-end direct path at
    the reference microphone.
    """

    scenario_id: str
    features: np.ndarray
    aux: Optional[np.ndarray]
    target: np.ndarray

    @property
    def reference(self) -> np.ndarray:
        return self.features[0] + 1j * self.features[1]


def beam_planes(
    mix_spec: SpectroTensor,
    array: ArraySpec,
    directions_deg: np.ndarray,
    forget: float = 0.98,
    loading: float = 1e-6,
) -> np.ndarray:
    """
    RI planes (2 x T x F) of an online MVDR following the given per-frame look directions.
    """
    beam = mvdr_online(mix_spec, directions_deg, array, forget, mix_spec.config, loading)
    return ri_pack([beam])


def make_aec_sample(
    scenario_id: str,
    features: np.ndarray,
    target: SpectroTensor,
    mode: FusionMode,
    ssdoa: Optional[SsDoaModel] = None,
    beam_ri: Optional[np.ndarray] = None,
) -> AecSample:
    """
    Assemble an AEC sample, running the frozen SS-DOA model when the mode needs its taps.

    :param scenario_id: Scenario identifier.
    :type scenario_id: str
    :param features: (2Q + 2) x T x F input.
    :type features: np.ndarray
    :param target: Near-end direct-path spectrogram; channel 0 is the reference microphone.
    :type target: SpectroTensor
    :param mode: Fusion mode.
    :type mode: FusionMode
    :param ssdoa: Trained SS-DOA model (modes E, ET, ETA).
    :type ssdoa: Optional[SsDoaModel]
    :param beam_ri: Beamformer RI planes (mode B).
    :type beam_ri: Optional[np.ndarray]
    :return: The sample.
    :rtype: AecSample
    :raises DomainError: If the mode's source is missing.
    """
    mode = FusionMode(mode)
    outputs = None
    if mode.uses_ssdoa:
        if ssdoa is None:
            raise DomainError(f"Fusion mode {mode.value} needs a trained SS-DOA model")
        outputs = ssdoa.forward(features, record=False)
    aux = direction_inputs(mode, outputs, beam_ri if mode is FusionMode.B else None)
    return AecSample(scenario_id, features, aux, np.asarray(target.data[0]))


class AecTask(TrainingTask):
    """
    Power-compressed RI plus magnitude loss between the estimate and the near-end direct path.
    """

    def __init__(self, model: DirectionalAec, power: float = 0.5) -> None:
        super().__init__(model)
        self.power = power

    def loss(self, sample: AecSample, backward: bool = True) -> float:
        out: AecOutput = self.model.run_sequence(sample.features, sample.aux, record=backward)
        value, grad = ri_mag_loss(out.estimate, sample.target, self.power)
        if backward:
            self.model.backward(grad, out, sample.reference)
        return value


def enhance(model: DirectionalAec, sample: AecSample, config: Optional[StftConfig] = None, length: Optional[int] = None) -> np.ndarray:
    """
    Enhanced reference-microphone waveform of a sample.
    """
    return model.run_sequence(sample.features, sample.aux, record=False).waveform(length, config)
