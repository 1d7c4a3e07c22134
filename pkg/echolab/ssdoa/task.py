# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from echolab.eval.metrics import doa_prf
from echolab.labels import DoaLabelTrack, decode_predictions, encode_direction_sets
from echolab.neuralcore import TrainingTask, doa_loss
from echolab.ssdoa.model import SsDoaModel


@dataclass
class DoaSample:
    scenario_id: str
    features: np.ndarray
    labels: DoaLabelTrack


class DoaTask(TrainingTask):
    """
    Sum of the loudspeaker and talker BCE losses over one utterance.
    """

    def __init__(self, model: SsDoaModel) -> None:
        super().__init__(model)

    def loss(self, sample: DoaSample, backward: bool = True) -> float:
        out = self.model.forward(sample.features, record=backward)
        total, grad_s, grad_t = doa_loss(
            out.logits_s, out.logits_t, sample.labels.loudspeakers, sample.labels.talker
        )
        if backward:
            self.model.backward(grad_s, grad_t)
        return total


def predicted_tracks(model: SsDoaModel, features: np.ndarray, threshold: float = 0.5) -> Dict[str, np.ndarray]:
    """
    Decoded one-hot tracks of both branches for a whole utterance (batch forward).
    """
    out = model.forward(features, record=False)
    d = model.config.num_directions
    return {
        "loudspeakers": encode_direction_sets(decode_predictions(out.logits_s, 2, threshold), d),
        "talker": encode_direction_sets(decode_predictions(out.logits_t, 1, threshold), d),
    }


def frame_f1(model: SsDoaModel, samples: Sequence[DoaSample], threshold: float = 0.5) -> Dict[str, float]:
    """
    Pooled frame-level precision, recall and F1 of both branches over a set of utterances.
    """
    predicted: Dict[str, List[np.ndarray]] = {"loudspeakers": [], "talker": []}
    labels: Dict[str, List[np.ndarray]] = {"loudspeakers": [], "talker": []}
    for sample in samples:
        tracks = predicted_tracks(model, sample.features, threshold)
        for branch in predicted:
            predicted[branch].append(tracks[branch])
            labels[branch].append(getattr(sample.labels, branch))
    scores = {}
    for branch in predicted:
        p, r, f1 = doa_prf(np.concatenate(predicted[branch]), np.concatenate(labels[branch]))
        scores[f"{branch}_precision"], scores[f"{branch}_recall"], scores[f"{branch}_f1"] = p, r, f1
    both_pred = np.concatenate(predicted["loudspeakers"] + predicted["talker"])
    both_label = np.concatenate(labels["loudspeakers"] + labels["talker"])
    scores["precision"], scores["recall"], scores["f1"] = doa_prf(both_pred, both_label)
    return scores
