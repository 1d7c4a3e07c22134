# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator, List, Tuple

import numpy as np

from echolab.errors import ConfigError, DomainError
from echolab.neuralcore.layers import Layer


class Model(ABC):
    """
    Abstract base class of the fixed network architectures.

    A model owns named layers and composes their per-frame steps in `step_frame`. `forward`
    runs the frames of a sequence one by one through the same code a streaming session uses,
    and `backward` walks the recorded sequence back through the layers.
    """

    def __init__(self, name: str, seed: int = 0) -> None:
        """
        Initializes a new Model instance.

        :param name: Name used in logs and checkpoint headers.
        :type name: str
        :param seed: Seed of parameter initialization and dropout masks. Defaults to 0.
        :type seed: int
        """
        self.name: str = name
        self.seed: int = seed
        self.rng: np.random.Generator = np.random.default_rng(seed)
        self.logger: logging.Logger = logging.getLogger(self.__class__.__name__)
        self.layers: Dict[str, Layer] = {}
        self.training: bool = False

    def add(self, layer: Layer) -> Layer:
        assert layer.name not in self.layers, f"Duplicate layer name {layer.name}"
        self.layers[layer.name] = layer
        return layer

    @property
    def dtype(self) -> np.dtype:
        for layer in self.layers.values():
            if layer.params:
                return layer.dtype
        return np.dtype(np.float32)

    def train(self) -> Model:
        self.training = True
        for layer in self.layers.values():
            layer.training = True
        return self

    def eval(self) -> Model:
        self.training = False
        for layer in self.layers.values():
            layer.training = False
        return self

    def astype(self, dtype: np.dtype) -> Model:
        for layer in self.layers.values():
            layer.astype(dtype)
        return self

    def named_parameters(self) -> Iterator[Tuple[str, np.ndarray]]:
        for layer in self.layers.values():
            for key, value in layer.params.items():
                yield f"{layer.name}.{key}", value

    def parameters(self) -> Dict[str, np.ndarray]:
        return dict(self.named_parameters())

    def gradients(self) -> Dict[str, np.ndarray]:
        return {
            f"{layer.name}.{key}": value
            for layer in self.layers.values()
            for key, value in layer.grads.items()
        }

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        layer_name, key = name.rsplit(".", 1)
        if layer_name not in self.layers or key not in self.layers[layer_name].params:
            raise ConfigError(f"{self.name} has no parameter {name}")
        current = self.layers[layer_name].params[key]
        if current.shape != tuple(value.shape):
            raise ConfigError(f"Shape mismatch for {name}: {current.shape} vs {value.shape}")
        current[...] = value

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.named_parameters()}

    def load_state_dict(self, tensors: Dict[str, np.ndarray], strict: bool = True) -> None:
        own = set(self.parameters())
        if strict and own != set(tensors):
            missing, extra = sorted(own - set(tensors)), sorted(set(tensors) - own)
            raise ConfigError(f"{self.name}: checkpoint mismatch, missing {missing}, unexpected {extra}")
        for name, value in tensors.items():
            if name in own:
                self.set_parameter(name, value)

    def zero_grad(self) -> None:
        for layer in self.layers.values():
            layer.zero_grad()

    def count_params(self) -> int:
        return sum(layer.num_params() for layer in self.layers.values())

    def macs_per_frame(self) -> int:
        return sum(layer.macs_per_frame() for layer in self.layers.values())

    def init_state(self) -> Dict[str, Any]:
        return {name: layer.init_state() for name, layer in self.layers.items()}

    def reset_cache(self) -> None:
        for layer in self.layers.values():
            layer.reset_cache()

    def run(self, name: str, x: np.ndarray, state: Dict[str, Any], record: bool) -> np.ndarray:
        """
        Step a single layer, updating its entry of the model state in place.
        """
        y, state[name] = self.layers[name].step(x, state[name], record)
        return y

    @abstractmethod
    def step_frame(self, x: np.ndarray, state: Dict[str, Any], record: bool = False) -> Any:
        """
        Process one input frame through the whole network.

        :param x: Input frame (channels x F).
        :type x: np.ndarray
        :param state: Per-layer state, updated in place.
        :type state: Dict[str, Any]
        :param record: Keep what backward needs. Defaults to False.
        :type record: bool
        :return: Per-frame outputs of the network.
        :rtype: Any
        """
        pass

    @abstractmethod
    def stack_outputs(self, outputs: List[Any]) -> Any:
        """
        Combine the per-frame outputs of a sequence into sequence outputs.
        """
        pass

    def forward(self, x: np.ndarray, record: bool = None) -> Any:
        """
        Run a whole sequence, frames along the second axis of the (channels x T x F) input.

        :param x: Input tensor, channels x T x F.
        :type x: np.ndarray
        :param record: Keep activations for backward. Defaults to the training flag.
        :type record: bool
        :return: Sequence outputs as assembled by stack_outputs.
        :rtype: Any
        """
        if x.ndim != 3:
            raise DomainError(f"{self.name}: expected channels x T x F input, got {x.shape}")
        record = self.training if record is None else record
        x = np.asarray(x, dtype=self.dtype)
        self.reset_cache()
        state = self.init_state()
        outputs = [
            self.step_frame(np.ascontiguousarray(x[:, t, :]), state, record) for t in range(x.shape[1])
        ]
        return self.stack_outputs(outputs)

    def reseed(self, *keys: int) -> None:
        """
        Give every stochastic layer a fresh generator derived from the model seed and keys.
        """
        for index, layer in enumerate(self.layers.values()):
            if hasattr(layer, "rng"):
                layer.rng = np.random.default_rng([self.seed, *keys, index])

    def describe(self) -> Dict[str, Any]:
        """
        Architecture description stored in checkpoint headers.
        """
        return {"name": self.name, "seed": self.seed}
