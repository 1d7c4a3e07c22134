# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.special import expit, softmax

from echolab.errors import DomainError


class Layer(ABC):
    """
    Abstract base class for all layers of the fixed architectures.

    A layer processes one frame at a time through `step`, carrying an explicit state between
    frames, so that batch processing and frame-online processing run the same code. When a
    step is recorded, the layer keeps what its `backward` needs; `backward` then consumes the
    whole recorded sequence at once.
    """

    def __init__(self, name: str) -> None:
        """
        Initializes a new Layer instance with an empty parameter set.

        :param name: Name of the layer, unique inside its model.
        :type name: str
        """
        self.name: str = name
        self.logger: logging.Logger = logging.getLogger(self.__class__.__name__)
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.training: bool = False
        self._cache: List[Any] = []

    def add_param(self, key: str, value: np.ndarray) -> np.ndarray:
        self.params[key] = value
        self.grads[key] = np.zeros_like(value)
        return value

    @property
    def dtype(self) -> np.dtype:
        for value in self.params.values():
            return value.dtype
        return np.dtype(np.float64)

    def init_state(self) -> Any:
        """
        State carried from frame to frame; stateless layers return None.
        """
        return None

    @abstractmethod
    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        """
        Process one frame.

        :param x: Input frame.
        :type x: np.ndarray
        :param state: State returned by the previous step or by init_state.
        :type state: Any
        :param record: Keep intermediate values for backward. Defaults to False.
        :type record: bool
        :return: Output frame and the new state.
        :rtype: Tuple[np.ndarray, Any]
        """
        pass

    @abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        """
        Backpropagate through all recorded frames and accumulate parameter gradients.

        :param grad: Gradient of the loss with respect to the outputs, frames first.
        :type grad: np.ndarray
        :return: Gradient with respect to the inputs, frames first.
        :rtype: np.ndarray
        """
        pass

    def forward(self, x: np.ndarray, state: Any = None, record: bool = True) -> np.ndarray:
        """
        Run the layer over a sequence with frames along the first axis.
        """
        self.reset_cache()
        state = self.init_state() if state is None else state
        outputs = []
        for t in range(x.shape[0]):
            y, state = self.step(x[t], state, record)
            outputs.append(y)
        self.final_state = state
        return np.stack(outputs)

    def reset_cache(self) -> None:
        self._cache = []

    def zero_grad(self) -> None:
        for key in self.grads:
            self.grads[key][...] = 0.0

    def num_params(self) -> int:
        return int(sum(value.size for value in self.params.values()))

    def macs_per_frame(self) -> int:
        return 0

    def astype(self, dtype: np.dtype) -> None:
        for key in list(self.params):
            self.params[key] = self.params[key].astype(dtype)
            self.grads[key] = np.zeros_like(self.params[key])

    def _recorded(self, index: int = 0) -> np.ndarray:
        if not self._cache:
            raise DomainError(f"{self.name}: backward without a recorded forward pass")
        return np.stack([entry[index] for entry in self._cache])


def _uniform(rng: np.random.Generator, bound: float, shape: Tuple[int, ...]) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Conv2dCausal(Layer):
    """
    3x3 convolution over (time, frequency): two past frames and the current one in time,
    one bin either side in frequency (zero padded, F preserved).

    Kernel tap [i, j] multiplies frame t - 2 + i and bin f - 1 + j.
    """

    KERNEL = (3, 3)

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        num_bins: int,
        rng: np.random.Generator,
        kernel: Tuple[int, int] = (3, 3),
    ) -> None:
        super().__init__(name)
        if tuple(kernel) != self.KERNEL:
            raise DomainError(f"Only 3x3 kernels are supported, got {kernel}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.num_bins = num_bins
        bound = 1.0 / np.sqrt(in_channels * 9)
        self.add_param("weight", _uniform(rng, bound, (out_channels, in_channels, 3, 3)))
        self.add_param("bias", _uniform(rng, bound, (out_channels,)))

    def init_state(self) -> np.ndarray:
        return np.zeros((2, self.in_channels, self.num_bins), dtype=self.dtype)

    def step(self, x: np.ndarray, state: np.ndarray, record: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        if x.shape != (self.in_channels, self.num_bins):
            raise DomainError(
                f"{self.name}: expected frame ({self.in_channels}, {self.num_bins}), got {x.shape}"
            )
        frames = np.concatenate([state, x[None]], axis=0)
        padded = np.pad(frames, ((0, 0), (0, 0), (1, 1)))
        f = self.num_bins
        patches = np.stack(
            [np.stack([padded[i, :, j : j + f] for j in range(3)], axis=1) for i in range(3)], axis=1
        )
        weight = self.params["weight"].reshape(self.out_channels, -1)
        y = weight @ patches.reshape(-1, f) + self.params["bias"][:, None]
        if record:
            self._cache.append((x,))
        return np.ascontiguousarray(y), np.ascontiguousarray(frames[1:])

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x = self._recorded()
        t, f = x.shape[0], self.num_bins
        xp = np.pad(x, ((2, 0), (0, 0), (1, 1)))
        dxp = np.zeros_like(xp, dtype=np.result_type(xp, grad))
        weight = self.params["weight"]
        dweight = np.zeros_like(weight)
        for i in range(3):
            for j in range(3):
                dweight[:, :, i, j] = np.einsum("tof,tcf->oc", grad, xp[i : i + t, :, j : j + f])
                dxp[i : i + t, :, j : j + f] += np.einsum("oc,tof->tcf", weight[:, :, i, j], grad)
        self.grads["weight"] += dweight
        self.grads["bias"] += grad.sum(axis=(0, 2))
        return dxp[2:, :, 1 : f + 1]

    def macs_per_frame(self) -> int:
        return self.out_channels * self.in_channels * 9 * self.num_bins


class LayerNorm(Layer):
    """
    Normalization over the channel axis at every (t, f) position.

    The affine parameters are per (channel, bin) by default or per channel with
    affine="channel".
    """

    def __init__(
        self, name: str, channels: int, num_bins: int, eps: float = 1e-5, affine: str = "channel_bin"
    ) -> None:
        super().__init__(name)
        if affine not in ("channel_bin", "channel"):
            raise DomainError(f"Unknown LayerNorm affine mode {affine!r}")
        self.channels = channels
        self.num_bins = num_bins
        self.eps = eps
        self.affine = affine
        shape = (channels, num_bins) if affine == "channel_bin" else (channels, 1)
        self.add_param("gamma", np.ones(shape, dtype=np.float32))
        self.add_param("beta", np.zeros(shape, dtype=np.float32))

    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        mean = x.mean(axis=0)
        var = ((x - mean) ** 2).mean(axis=0)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        if record:
            self._cache.append((xhat, inv_std))
        return self.params["gamma"] * xhat + self.params["beta"], None

    def backward(self, grad: np.ndarray) -> np.ndarray:
        xhat = self._recorded(0)
        inv_std = self._recorded(1)[:, None, :]
        reduce_axes = (0,) if self.affine == "channel_bin" else (0, 2)
        dgamma = (grad * xhat).sum(axis=reduce_axes)
        dbeta = grad.sum(axis=reduce_axes)
        self.grads["gamma"] += dgamma.reshape(self.grads["gamma"].shape)
        self.grads["beta"] += dbeta.reshape(self.grads["beta"].shape)
        gx = grad * self.params["gamma"]
        return inv_std * (
            gx - gx.mean(axis=1, keepdims=True) - xhat * (gx * xhat).mean(axis=1, keepdims=True)
        )


class Elu(Layer):
    def __init__(self, name: str, alpha: float = 1.0) -> None:
        super().__init__(name)
        self.alpha = alpha

    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        if record:
            self._cache.append((x,))
        return np.where(x > 0, x, self.alpha * np.expm1(np.minimum(x, 0))), None

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x = self._recorded()
        return grad * np.where(x > 0, 1.0, self.alpha * np.exp(np.minimum(x, 0))).astype(x.dtype)


class Linear(Layer):
    """
    Affine map y = x W + b along one axis of the frame (the last axis by default).

    With axis=0 on a C x F frame, the same map is applied to the channel vector of every bin.
    """

    def __init__(
        self,
        name: str,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        axis: int = -1,
        positions: int = 1,
    ) -> None:
        super().__init__(name)
        self.in_features = in_features
        self.out_features = out_features
        self.axis = axis
        self.positions = positions
        bound = 1.0 / np.sqrt(in_features)
        self.add_param("weight", _uniform(rng, bound, (in_features, out_features)))
        self.add_param("bias", _uniform(rng, bound, (out_features,)))

    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        if x.shape[self.axis] != self.in_features:
            raise DomainError(
                f"{self.name}: expected {self.in_features} features on axis {self.axis}, got {x.shape}"
            )
        moved = np.moveaxis(x, self.axis, -1)
        y = moved @ self.params["weight"] + self.params["bias"]
        if record:
            self._cache.append((x,))
        return np.ascontiguousarray(np.moveaxis(y, -1, self.axis)), None

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x = self._recorded()
        seq_axis = self.axis if self.axis < 0 else self.axis + 1
        xm = np.moveaxis(x, seq_axis, -1).reshape(-1, self.in_features)
        gm = np.moveaxis(grad, seq_axis, -1)
        flat = gm.reshape(-1, self.out_features)
        self.grads["weight"] += xm.T @ flat
        self.grads["bias"] += flat.sum(axis=0)
        return np.moveaxis(gm @ self.params["weight"].T, -1, seq_axis)

    def macs_per_frame(self) -> int:
        return self.in_features * self.out_features * self.positions


class Dropout(Layer):
    """
    Inverted dropout; the identity outside training.
    """

    def __init__(self, name: str, rate: float, rng: np.random.Generator) -> None:
        super().__init__(name)
        if not 0.0 <= rate < 1.0:
            raise DomainError(f"Dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        if not self.training or self.rate == 0.0:
            if record:
                self._cache.append((None,))
            return x, None
        mask = (self.rng.random(x.shape) >= self.rate).astype(x.dtype) / x.dtype.type(1.0 - self.rate)
        if record:
            self._cache.append((mask,))
        return x * mask, None

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if not self._cache:
            raise DomainError(f"{self.name}: backward without a recorded forward pass")
        if self._cache[0][0] is None:
            return grad
        return grad * self._recorded()


class Sigmoid(Layer):
    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        y = expit(x)
        if record:
            self._cache.append((y,))
        return y, None

    def backward(self, grad: np.ndarray) -> np.ndarray:
        y = self._recorded()
        return grad * y * (1.0 - y)


class Softmax(Layer):
    """
    Softmax along a (negative) frame axis.
    """

    def __init__(self, name: str, axis: int = -1) -> None:
        super().__init__(name)
        if axis >= 0:
            raise DomainError("Softmax axis must be given from the end")
        self.axis = axis

    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        if x.ndim == 0 or x.shape[self.axis] == 0:
            raise DomainError("Softmax over an empty axis")
        y = softmax(x, axis=self.axis)
        if record:
            self._cache.append((y,))
        return y, None

    def backward(self, grad: np.ndarray) -> np.ndarray:
        y = self._recorded()
        return y * (grad - (grad * y).sum(axis=self.axis, keepdims=True))


class SubbandTimeLstm(Layer):
    """
    One LSTM, shared by all frequency bins, running along time on the channel vector of each bin.

    Frames are C x F in and H x F out. Gates are ordered input, forget, cell, output.
    """

    def __init__(
        self, name: str, input_size: int, hidden_size: int, num_bins: int, rng: np.random.Generator
    ) -> None:
        super().__init__(name)
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.num_bins = num_bins
        bound = 1.0 / np.sqrt(hidden_size)
        gates = 4 * hidden_size
        self.add_param("w_ih", _uniform(rng, bound, (input_size, gates)))
        self.add_param("w_hh", _uniform(rng, bound, (hidden_size, gates)))
        self.add_param("b_ih", _uniform(rng, bound, (gates,)))
        self.add_param("b_hh", _uniform(rng, bound, (gates,)))

    def init_state(self) -> Tuple[np.ndarray, np.ndarray]:
        zeros = np.zeros((self.num_bins, self.hidden_size), dtype=self.dtype)
        return zeros, zeros.copy()

    def step(
        self, x: np.ndarray, state: Tuple[np.ndarray, np.ndarray], record: bool = False
    ) -> Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
        if x.shape != (self.input_size, self.num_bins):
            raise DomainError(
                f"{self.name}: expected frame ({self.input_size}, {self.num_bins}), got {x.shape}"
            )
        h_prev, c_prev = state
        xf = np.ascontiguousarray(x.T)
        p = self.params
        z = xf @ p["w_ih"] + h_prev @ p["w_hh"] + p["b_ih"] + p["b_hh"]
        hs = self.hidden_size
        i = expit(z[:, :hs])
        f = expit(z[:, hs : 2 * hs])
        g = np.tanh(z[:, 2 * hs : 3 * hs])
        o = expit(z[:, 3 * hs :])
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        if record:
            self._cache.append((xf, h_prev, c_prev, i, f, g, o, tanh_c))
        return np.ascontiguousarray(h.T), (h, c)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        xs, h_prev, c_prev, i, f, g, o, tanh_c = (self._recorded(k) for k in range(8))
        t = xs.shape[0]
        p = self.params
        dh_next = np.zeros_like(h_prev[0])
        dc_next = np.zeros_like(c_prev[0])
        dz = np.zeros((t,) + h_prev.shape[1:-1] + (4 * self.hidden_size,), dtype=h_prev.dtype)
        for k in reversed(range(t)):
            dh = grad[k].T + dh_next
            do = dh * tanh_c[k]
            dc = dh * o[k] * (1.0 - tanh_c[k] ** 2) + dc_next
            di = dc * g[k]
            dg = dc * i[k]
            df = dc * c_prev[k]
            dc_next = dc * f[k]
            dz[k] = np.concatenate(
                [
                    di * i[k] * (1.0 - i[k]),
                    df * f[k] * (1.0 - f[k]),
                    dg * (1.0 - g[k] ** 2),
                    do * o[k] * (1.0 - o[k]),
                ],
                axis=-1,
            )
            dh_next = dz[k] @ p["w_hh"].T
        self.grads["w_ih"] += np.einsum("tfi,tfg->ig", xs, dz)
        self.grads["w_hh"] += np.einsum("tfh,tfg->hg", h_prev, dz)
        self.grads["b_ih"] += dz.sum(axis=(0, 1))
        self.grads["b_hh"] += dz.sum(axis=(0, 1))
        return np.ascontiguousarray(np.swapaxes(dz @ p["w_ih"].T, 1, 2))

    def macs_per_frame(self) -> int:
        return 4 * self.hidden_size * (self.input_size + self.hidden_size) * self.num_bins
