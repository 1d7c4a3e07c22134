# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from echolab.errors import ConfigError, DomainError
from echolab.neuralcore import (
    Conv2dCausal,
    Dropout,
    Elu,
    LayerNorm,
    Linear,
    Model,
    SubbandTimeLstm,
    count_macs,
    load_checkpoint,
)

logger = logging.getLogger(__name__)

REFERENCE_PARAMS = 92_800
REFERENCE_MACS_PER_SECOND = 826.8e6


@dataclass(frozen=True)
class SsDoaConfig:
    num_mics: int = 6
    channels: int = 20
    num_bins: int = 161
    num_directions: int = 36
    num_blocks: int = 4
    dropout: float = 0.2
    ln_affine: str = "channel_bin"
    ln_eps: float = 1e-5
    seed: int = 0

    @property
    def in_channels(self) -> int:
        return 2 * self.num_mics + 2

    @staticmethod
    def from_dict(doc: Dict) -> SsDoaConfig:
        return SsDoaConfig(**doc)


@dataclass(frozen=True)
class CrBlockSpec:
    """
    Wiring of one convolutional-recurrent block.

    Every block is Conv2D -> LN -> ELU -> T-chLSTM (2C hidden) -> Linear(2C -> out). The last
    block's convolution compresses to 2 channels and its linear map goes back to 2.
    """

    index: int
    in_channels: int
    out_channels: int
    hidden: int
    is_last: bool = False

    def layer_names(self) -> Tuple[str, ...]:
        return tuple(f"{kind}{self.index}" for kind in ("conv", "ln", "elu", "lstm", "proj"))


@dataclass
class SsDoaOutput:
    """
    Sequence outputs: logits of both branches (T x D x 2, class 0 is "present"), the
    2 x T x F embedding of the last CR block and its talker plane (T x F).
    """

    logits_s: np.ndarray
    logits_t: np.ndarray
    embedding: np.ndarray
    talker_plane: np.ndarray

    @property
    def num_frames(self) -> int:
        return self.logits_s.shape[0]


class SsDoaModel(Model):
    """
    Four CR blocks followed by two classification heads, one for the loudspeakers (plane 0 of
    the last block output) and one for the target talker (plane 1).
    """

    def __init__(self, config: SsDoaConfig = SsDoaConfig()) -> None:
        super().__init__("ssdoa", config.seed)
        if config.num_mics < 2:
            raise DomainError(f"SS-DOA needs at least two microphones, got {config.num_mics}")
        if config.num_blocks < 1:
            raise DomainError("SS-DOA needs at least one CR block")
        self.config = config
        c, f, rng = config.channels, config.num_bins, self.rng
        self.blocks: List[CrBlockSpec] = []
        for index in range(1, config.num_blocks + 1):
            is_last = index == config.num_blocks
            spec = CrBlockSpec(
                index=index,
                in_channels=config.in_channels if index == 1 else c,
                out_channels=2 if is_last else c,
                hidden=2 * c,
                is_last=is_last,
            )
            conv, ln, elu, lstm, proj = spec.layer_names()
            self.add(Conv2dCausal(conv, spec.in_channels, spec.out_channels, f, rng))
            self.add(LayerNorm(ln, spec.out_channels, f, config.ln_eps, config.ln_affine))
            self.add(Elu(elu))
            self.add(SubbandTimeLstm(lstm, spec.out_channels, spec.hidden, f, rng))
            self.add(Linear(proj, spec.hidden, spec.out_channels, rng, axis=0, positions=f))
            self.blocks.append(spec)
        width = 2 * config.num_directions
        for branch in ("s", "t"):
            self.add(Linear(f"head_{branch}", f, width, rng))
            self.add(Dropout(f"drop_{branch}", config.dropout, rng))

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "seed": self.seed, "config": asdict(self.config)}

    def check_input(self, x: np.ndarray) -> None:
        expected = (self.config.in_channels, self.config.num_bins)
        if (x.shape[0], x.shape[-1]) != expected:
            raise DomainError(
                f"SS-DOA expects {expected[0]} channels and {expected[1]} bins, got {x.shape}"
            )

    def step_frame(self, x: np.ndarray, state: Dict[str, Any], record: bool = False) -> Tuple:
        self.check_input(x)
        h = x
        for spec in self.blocks:
            for name in spec.layer_names():
                h = self.run(name, h, state, record)
        d = self.config.num_directions
        heads = []
        for plane, branch in ((h[0], "s"), (h[1], "t")):
            logits = self.run(f"head_{branch}", np.ascontiguousarray(plane), state, record)
            logits = self.run(f"drop_{branch}", logits, state, record)
            heads.append(logits.reshape(d, 2))
        return heads[0], heads[1], h, h[1]

    def stack_outputs(self, outputs: List[Tuple]) -> SsDoaOutput:
        return SsDoaOutput(
            logits_s=np.stack([o[0] for o in outputs]),
            logits_t=np.stack([o[1] for o in outputs]),
            embedding=np.stack([o[2] for o in outputs], axis=1),
            talker_plane=np.stack([o[3] for o in outputs]),
        )

    def forward(self, x: np.ndarray, record: Optional[bool] = None) -> SsDoaOutput:
        """
        Run a (2Q + 2) x T x F input; strictly causal in T.

        :param x: RI-packed microphones and far end.
        :type x: np.ndarray
        :param record: Keep activations for backward. Defaults to the training flag.
        :type record: Optional[bool]
        :return: Logits of both branches and the taps consumed by the AEC fusion modes.
        :rtype: SsDoaOutput
        :raises DomainError: If the input shape does not match the model.
        """
        if x.ndim != 3:
            raise DomainError(f"SS-DOA expects channels x T x F input, got {x.shape}")
        self.check_input(x)
        return super().forward(x, record)

    def backward(
        self, grad_s: np.ndarray, grad_t: np.ndarray, grad_embedding: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """
        Backpropagate logit gradients (and optionally an embedding gradient) through the
        recorded sequence.

        :param grad_s: Gradient of the loudspeaker logits, T x D x 2.
        :type grad_s: np.ndarray
        :param grad_t: Gradient of the talker logits, T x D x 2.
        :type grad_t: np.ndarray
        :param grad_embedding: Gradient of the 2 x T x F embedding. Defaults to None.
        :type grad_embedding: Optional[np.ndarray]
        :return: Gradient with respect to the input, (2Q + 2) x T x F.
        :rtype: np.ndarray
        """
        t = grad_s.shape[0]
        planes = []
        for grad, branch in ((grad_s, "s"), (grad_t, "t")):
            g = self.layers[f"drop_{branch}"].backward(grad.reshape(t, -1))
            planes.append(self.layers[f"head_{branch}"].backward(g))
        g = np.stack(planes, axis=1)
        if grad_embedding is not None:
            g = g + np.transpose(grad_embedding, (1, 0, 2))
        for spec in reversed(self.blocks):
            for name in reversed(spec.layer_names()):
                g = self.layers[name].backward(g)
        return np.transpose(g, (1, 0, 2))


def build_ssdoa(
    num_mics: int = 6, channels: int = 20, num_bins: int = 161, seed: int = 0, **kwargs: Any
) -> SsDoaModel:
    """
    Build an SS-DOA network and log its complexity.

    :param num_mics: Microphones Q; the input has 2Q + 2 channels. Defaults to 6.
    :type num_mics: int
    :param channels: Block width C. Defaults to 20.
    :type channels: int
    :param num_bins: Frequency bins F. Defaults to 161.
    :type num_bins: int
    :param seed: Initialization seed. Defaults to 0.
    :type seed: int
    :return: Model in eval mode.
    :rtype: SsDoaModel
    """
    config = SsDoaConfig(num_mics=num_mics, channels=channels, num_bins=num_bins, seed=seed, **kwargs)
    model = SsDoaModel(config)
    logger.info(
        "Built SS-DOA: %d input channels, %d parameters (reference %d), %.1f MMAC/s",
        config.in_channels,
        model.count_params(),
        REFERENCE_PARAMS,
        count_macs(model) / 1e6,
    )
    return model.eval()


def load_ssdoa(path: str) -> SsDoaModel:
    """
    Rebuild an SS-DOA model from a checkpoint written by the trainer.
    """
    tensors, meta = load_checkpoint(path)
    if meta.get("model", {}).get("name") != "ssdoa":
        raise ConfigError(f"{path} is not an SS-DOA checkpoint")
    config = SsDoaConfig.from_dict(meta["model"]["config"])
    model = SsDoaModel(config)
    model.load_state_dict({k: v for k, v in tensors.items() if not k.startswith("adam.")})
    return model.eval()
