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

from echolab.aec.fusion import FusionMode
from echolab.dsp import SpectroTensor, StftConfig, istft
from echolab.errors import ConfigError, DomainError
from echolab.neuralcore import (
    Conv2dCausal,
    Elu,
    LayerNorm,
    Linear,
    Model,
    S4DBlock,
    Softmax,
    SubbandTimeLstm,
    count_macs,
    load_checkpoint,
)

logger = logging.getLogger(__name__)

REFERENCE_PARAMS = 950_800
REFERENCE_MACS_PER_SECOND = 3.64e9


@dataclass(frozen=True)
class IscrnConfig:
    """
    Architecture of the in-place AEC network.

    output="mask" multiplies the reference microphone by a tanh-bounded complex ratio mask,
    output="direct" emits the real and imaginary planes of the estimate. mask_bound="none" leaves
    the mask unbounded.
    """

    num_mics: int = 6
    mode: str = "none"
    channels: int = 24
    num_bins: int = 161
    encoder_blocks: int = 3
    decoder_blocks: int = 3
    s4d_state: int = 16
    num_directions: int = 36
    output: str = "mask"
    mask_bound: str = "tanh"
    ln_affine: str = "channel_bin"
    ln_eps: float = 1e-5
    seed: int = 0

    @property
    def fusion(self) -> FusionMode:
        return FusionMode(self.mode)

    @property
    def base_channels(self) -> int:
        return 2 * self.num_mics + 2

    @property
    def in_channels(self) -> int:
        return self.base_channels + self.fusion.extra_channels

    @staticmethod
    def from_dict(doc: Dict) -> IscrnConfig:
        return IscrnConfig(**doc)


@dataclass
class AecOutput:
    """
    Complex estimate of the reference-microphone near-end direct path (T x F) and the raw head
    output (2 x T x F: the bounded mask, or the RI planes in direct mode).
    """

    estimate: np.ndarray
    head: np.ndarray

    def to_spectro(self, config: Optional[StftConfig] = None) -> SpectroTensor:
        return SpectroTensor(self.estimate[None], config or StftConfig())

    def waveform(self, length: Optional[int] = None, config: Optional[StftConfig] = None) -> np.ndarray:
        return istft(self.to_spectro(config), length=length)[0]


class IscrnModel(Model):
    """
    In-place convolutional recurrent network: encoder blocks, a sub-band T-chLSTM core with a
    residual projection, an S4D block, decoder blocks fed by encoder skips, and a Conv2D head to
    two planes. No layer resamples frequency, so every activation keeps F bins.
    """

    def __init__(self, config: IscrnConfig = IscrnConfig()) -> None:
        super().__init__("iscrn", config.seed)
        if config.output not in ("mask", "direct"):
            raise DomainError(f"Unknown ISCRN output {config.output!r}")
        if config.mask_bound not in ("tanh", "none"):
            raise DomainError(f"Unknown mask bound {config.mask_bound!r}")
        if config.encoder_blocks < 1 or config.decoder_blocks < 1:
            raise DomainError("ISCRN needs at least one encoder and one decoder block")
        self.config = config
        c, f, rng = config.channels, config.num_bins, self.rng
        for index in range(1, config.encoder_blocks + 1):
            cin = config.in_channels if index == 1 else c
            self._conv_block(f"e{index}", cin, c)
        self.add(SubbandTimeLstm("lstm_core", c, 2 * c, f, rng))
        self.add(Linear("proj_core", 2 * c, c, rng, axis=0, positions=f))
        self.add(S4DBlock("s4d", c, f, rng, state_dim=config.s4d_state))
        for index in range(1, config.decoder_blocks + 1):
            self._conv_block(f"d{index}", c, c)
        self.add(Conv2dCausal("conv_out", c, 2, f, rng))

    def _conv_block(self, tag: str, cin: int, cout: int) -> None:
        config = self.config
        self.add(Conv2dCausal(f"conv_{tag}", cin, cout, config.num_bins, self.rng))
        self.add(LayerNorm(f"ln_{tag}", cout, config.num_bins, config.ln_eps, config.ln_affine))
        self.add(Elu(f"elu_{tag}"))

    @staticmethod
    def _block_names(tag: str) -> Tuple[str, str, str]:
        return f"conv_{tag}", f"ln_{tag}", f"elu_{tag}"

    def skip_source(self, decoder_index: int) -> Optional[int]:
        """
        Encoder block whose output is added to the input of a decoder block (mirror order).
        """
        source = self.config.encoder_blocks + 1 - decoder_index
        return source if source >= 1 else None

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "seed": self.seed, "config": asdict(self.config)}

    def check_input(self, x: np.ndarray) -> None:
        expected = (self.config.in_channels, self.config.num_bins)
        if (x.shape[0], x.shape[-1]) != expected:
            raise DomainError(
                f"ISCRN ({self.config.mode}) expects {expected[0]} channels and {expected[1]} bins, "
                f"got {x.shape}"
            )

    def step_frame(self, x: np.ndarray, state: Dict[str, Any], record: bool = False) -> Tuple:
        self.check_input(x)
        skips: List[np.ndarray] = []
        h = x
        for index in range(1, self.config.encoder_blocks + 1):
            for name in self._block_names(f"e{index}"):
                h = self.run(name, h, state, record)
            skips.append(h)
        core = self.run("lstm_core", h, state, record)
        h = h + self.run("proj_core", core, state, record)
        h = self.run("s4d", h, state, record)
        for index in range(1, self.config.decoder_blocks + 1):
            source = self.skip_source(index)
            if source is not None:
                h = h + skips[source - 1]
            for name in self._block_names(f"d{index}"):
                h = self.run(name, h, state, record)
        out = self.run("conv_out", h, state, record)
        if self.config.output == "direct":
            return out[0] + 1j * out[1], out
        mask = np.tanh(out) if self.config.mask_bound == "tanh" else out
        reference = x[0] + 1j * x[1]
        return (mask[0] + 1j * mask[1]) * reference, mask

    def stack_outputs(self, outputs: List[Tuple]) -> AecOutput:
        return AecOutput(
            estimate=np.stack([o[0] for o in outputs]),
            head=np.stack([o[1] for o in outputs], axis=1),
        )

    def backward(self, grad: np.ndarray, output: AecOutput, reference: np.ndarray) -> np.ndarray:
        """
        Backpropagate dL/dRe(S_hat) + j dL/dIm(S_hat) through the recorded sequence.

        :param grad: Complex gradient of the estimate, T x F.
        :type grad: np.ndarray
        :param output: Output of the recorded forward pass.
        :type output: AecOutput
        :param reference: Reference microphone spectrum the mask was applied to, T x F.
        :type reference: np.ndarray
        :return: Gradient with respect to the fused input through the network path,
            in_channels x T x F.
        :rtype: np.ndarray
        """
        if self.config.output == "direct":
            g = np.stack([np.real(grad), np.imag(grad)], axis=1)
        else:
            mask_bar = np.conj(reference) * grad
            mask = np.transpose(output.head, (1, 0, 2))
            g = np.stack([np.real(mask_bar), np.imag(mask_bar)], axis=1)
            if self.config.mask_bound == "tanh":
                g = g * (1.0 - mask**2)
        g = self.layers["conv_out"].backward(g.astype(self.dtype))
        skip_grads: Dict[int, np.ndarray] = {}
        for index in reversed(range(1, self.config.decoder_blocks + 1)):
            for name in reversed(self._block_names(f"d{index}")):
                g = self.layers[name].backward(g)
            source = self.skip_source(index)
            if source is not None:
                skip_grads[source] = g
        g = self.layers["s4d"].backward(g)
        g = g + self.layers["lstm_core"].backward(self.layers["proj_core"].backward(g))
        for index in reversed(range(1, self.config.encoder_blocks + 1)):
            if index in skip_grads:
                g = g + skip_grads[index]
            for name in reversed(self._block_names(f"e{index}")):
                g = self.layers[name].backward(g)
        return np.transpose(g, (1, 0, 2))


class DirectionalAec(IscrnModel):
    """
    ISCRN preceded by the fusion of one mode's directional input.

    Frames of the (2Q + 2)-channel microphone and far-end input are fused per frame with the
    auxiliary frame of the mode (see fusion.direction_inputs). Mode ETA owns a softmax over the
    presence classes and a trainable Linear(2D -> F) producing its extra plane.
    """

    def __init__(self, config: IscrnConfig = IscrnConfig()) -> None:
        super().__init__(config)
        self.name = "aec"
        if config.fusion is FusionMode.ETA:
            self.add(Softmax("eta_softmax", axis=-1))
            self.add(Linear("eta_proj", 2 * config.num_directions, config.num_bins, self.rng))

    @property
    def mode(self) -> FusionMode:
        return self.config.fusion

    def fuse_frame(
        self, x: np.ndarray, aux: Optional[np.ndarray], state: Dict[str, Any], record: bool = False
    ) -> np.ndarray:
        mode = self.mode
        if mode is FusionMode.none:
            return x
        if aux is None:
            raise DomainError(f"Fusion mode {mode.value} needs a directional input frame")
        if mode is FusionMode.ETA:
            probabilities = self.run("eta_softmax", np.asarray(aux, dtype=self.dtype), state, record)
            plane = self.run("eta_proj", probabilities.reshape(-1), state, record)
            extra = plane[None]
        else:
            extra = np.asarray(aux, dtype=self.dtype).reshape(mode.extra_channels, -1)
        return np.concatenate([x, extra], axis=0)

    def step_direction(
        self, x: np.ndarray, aux: Optional[np.ndarray], state: Dict[str, Any], record: bool = False
    ) -> Tuple:
        """
        One frame of microphones and far end plus the mode's auxiliary frame.
        """
        x = np.asarray(x, dtype=self.dtype)
        if x.shape != (self.config.base_channels, self.config.num_bins):
            raise DomainError(
                f"AEC expects ({self.config.base_channels}, {self.config.num_bins}) frames, got {x.shape}"
            )
        return self.step_frame(self.fuse_frame(x, aux, state, record), state, record)

    def run_sequence(
        self, mic_far: np.ndarray, aux: Optional[np.ndarray] = None, record: Optional[bool] = None
    ) -> AecOutput:
        """
        Run a whole utterance, fusing the auxiliary input frame by frame.

        :param mic_far: (2Q + 2) x T x F input.
        :type mic_far: np.ndarray
        :param aux: Auxiliary sequence, frames first. Defaults to None (mode none).
        :type aux: Optional[np.ndarray]
        :param record: Keep activations for backward. Defaults to the training flag.
        :type record: Optional[bool]
        :return: Estimate and head output.
        :rtype: AecOutput
        :raises DomainError: If input and auxiliary sequence disagree.
        """
        if mic_far.ndim != 3:
            raise DomainError(f"AEC expects channels x T x F input, got {mic_far.shape}")
        t = mic_far.shape[1]
        if aux is not None and aux.shape[0] != t:
            raise DomainError(f"Directional input has {aux.shape[0]} frames, mixture has {t}")
        record = self.training if record is None else record
        self.reset_cache()
        state = self.init_state()
        outputs = [
            self.step_direction(mic_far[:, k, :], None if aux is None else aux[k], state, record)
            for k in range(t)
        ]
        return self.stack_outputs(outputs)

    def backward(self, grad: np.ndarray, output: AecOutput, reference: np.ndarray) -> np.ndarray:
        g = super().backward(grad, output, reference)
        if self.mode is FusionMode.ETA:
            t = g.shape[1]
            g_proj = self.layers["eta_proj"].backward(np.ascontiguousarray(g[-1]))
            self.layers["eta_softmax"].backward(g_proj.reshape(t, -1, 2))
        return g


def aec_forward(model: IscrnModel, fused_input: np.ndarray) -> np.ndarray:
    """
    Estimate the near-end direct path at the reference microphone.

    :param model: Built AEC network.
    :type model: IscrnModel
    :param fused_input: in_channels x T x F input (see fuse_direction_info).
    :type fused_input: np.ndarray
    :return: Complex estimate, T x F.
    :rtype: np.ndarray
    :raises DomainError: If the channels do not match the model.
    """
    if fused_input.ndim != 3:
        raise DomainError(f"AEC expects channels x T x F input, got {fused_input.shape}")
    model.check_input(fused_input)
    return model.forward(fused_input, record=False).estimate


def build_iscrn(
    in_channels: int, mode: FusionMode = FusionMode.none, num_bins: int = 161, seed: int = 0, **kwargs: Any
) -> DirectionalAec:
    """
    Build the AEC network for a fusion mode and log its complexity.

    :param in_channels: Input channels, 2Q + 2 plus the mode's extra channels.
    :type in_channels: int
    :param mode: Fusion mode. Defaults to FusionMode.none.
    :type mode: FusionMode
    :param num_bins: Frequency bins F. Defaults to 161.
    :type num_bins: int
    :param seed: Initialization seed. Defaults to 0.
    :type seed: int
    :return: Model in eval mode.
    :rtype: DirectionalAec
    :raises DomainError: If in_channels does not fit the mode.
    """
    mode = FusionMode(mode)
    base = in_channels - mode.extra_channels
    if base < 6 or base % 2 != 0:
        raise DomainError(f"{in_channels} input channels do not fit fusion mode {mode.value}")
    config = IscrnConfig(num_mics=(base - 2) // 2, mode=mode.value, num_bins=num_bins, seed=seed, **kwargs)
    assert config.in_channels == in_channels, "fusion channel accounting"
    model = DirectionalAec(config)
    logger.info(
        "Built ISCRN (%s): %d input channels, %d parameters (reference %d), %.1f MMAC/s",
        mode.value,
        in_channels,
        model.count_params(),
        REFERENCE_PARAMS,
        count_macs(model) / 1e6,
    )
    return model.eval()


def load_aec(path: str) -> DirectionalAec:
    """
    Rebuild an AEC model from a checkpoint written by the trainer.
    """
    tensors, meta = load_checkpoint(path)
    if meta.get("model", {}).get("name") != "aec":
        raise ConfigError(f"{path} is not an AEC checkpoint")
    config = IscrnConfig.from_dict(meta["model"]["config"])
    model = DirectionalAec(config)
    model.load_state_dict({k: v for k, v in tensors.items() if not k.startswith("adam.")})
    return model.eval()
