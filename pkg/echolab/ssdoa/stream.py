# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from echolab.errors import DomainError, ProtocolError
from echolab.jsonl import append_jsonl
from echolab.labels import DirectionSet, decode_predictions, presence_probabilities
from echolab.ssdoa.model import SsDoaModel


@dataclass
class StreamRecord:
    """
    Per-frame streaming result.
    """

    frame: int
    loudspeakers: DirectionSet
    talker: DirectionSet
    p_loudspeakers: np.ndarray
    p_talker: np.ndarray
    logits_s: np.ndarray
    logits_t: np.ndarray

    def to_json(self) -> Dict[str, Any]:
        return {
            "frame": self.frame,
            "loudspeakers": list(self.loudspeakers),
            "talker": list(self.talker),
            "p_loudspeakers": [round(float(p), 6) for p in self.p_loudspeakers],
            "p_talker": [round(float(p), 6) for p in self.p_talker],
        }


class StreamSession:
    """
    Frame-online inference over shared, read-only model parameters.

    Each session owns its recurrent state; several sessions may run on one model concurrently,
    one thread per session.
    """

    def __init__(
        self,
        model: SsDoaModel,
        threshold: float = 0.5,
        max_loudspeakers: int = 2,
        max_talkers: int = 1,
    ) -> None:
        """
        Initializes a new StreamSession instance.

        :param model: SS-DOA model in eval mode.
        :type model: SsDoaModel
        :param threshold: Presence threshold of the decoder. Defaults to 0.5.
        :type threshold: float
        :param max_loudspeakers: Directions kept per frame on the loudspeaker branch. Defaults to 2.
        :type max_loudspeakers: int
        :param max_talkers: Directions kept per frame on the talker branch. Defaults to 1.
        :type max_talkers: int
        :raises DomainError: If the model is in training mode.
        """
        if model.training:
            raise DomainError("Streaming inference needs a model in eval mode")
        self.logger = logging.getLogger(self.__class__.__name__)
        self.model = model
        self.threshold = threshold
        self.max_loudspeakers = max_loudspeakers
        self.max_talkers = max_talkers
        self.state = model.init_state()
        self.next_index = 0

    def push(self, index: int, frame: np.ndarray) -> StreamRecord:
        """
        Process the next frame.

        :param index: Frame index; must equal the number of frames pushed so far.
        :type index: int
        :param frame: Input frame, (2Q + 2) x F.
        :type frame: np.ndarray
        :return: Decoded directions and probabilities of this frame.
        :rtype: StreamRecord
        :raises ProtocolError: If the frame arrives out of order.
        """
        if index != self.next_index:
            raise ProtocolError(f"Expected frame {self.next_index}, got frame {index}")
        x = np.ascontiguousarray(np.asarray(frame, dtype=self.model.dtype))
        logits_s, logits_t, _, _ = self.model.step_frame(x, self.state, record=False)
        self.next_index += 1
        return StreamRecord(
            frame=index,
            loudspeakers=decode_predictions(logits_s[None], self.max_loudspeakers, self.threshold)[0],
            talker=decode_predictions(logits_t[None], self.max_talkers, self.threshold)[0],
            p_loudspeakers=presence_probabilities(logits_s),
            p_talker=presence_probabilities(logits_t),
            logits_s=logits_s,
            logits_t=logits_t,
        )


def iterate_frames(features: np.ndarray) -> Iterable[Tuple[int, np.ndarray]]:
    """
    (index, frame) pairs of a (channels x T x F) tensor in time order.
    """
    for t in range(features.shape[1]):
        yield t, features[:, t, :]


def stream_infer(
    model: SsDoaModel,
    frames: Union[np.ndarray, Iterable[Tuple[int, np.ndarray]]],
    threshold: float = 0.5,
    jsonl_path: Optional[str] = None,
) -> List[StreamRecord]:
    """
    Decode loudspeaker and talker directions frame by frame.

    :param model: SS-DOA model in eval mode.
    :type model: SsDoaModel
    :param frames: Either a (2Q + 2) x T x F tensor or an iterator of (index, frame) pairs.
    :type frames: Union[np.ndarray, Iterable[Tuple[int, np.ndarray]]]
    :param threshold: Presence threshold. Defaults to 0.5.
    :type threshold: float
    :param jsonl_path: Append one JSON record per frame to this file. Defaults to None.
    :type jsonl_path: Optional[str]
    :return: One record per frame.
    :rtype: List[StreamRecord]
    :raises ProtocolError: If frames arrive out of order.
    """
    if isinstance(frames, np.ndarray):
        frames = iterate_frames(frames)
    session = StreamSession(model, threshold)
    records = []
    for index, frame in frames:
        record = session.push(index, frame)
        if jsonl_path:
            append_jsonl(jsonl_path, record.to_json())
        records.append(record)
    return records
