# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
from typing import Any, Optional, Tuple

import numpy as np

from echolab.errors import DomainError
from echolab.neuralcore.layers import Layer

POLE_LIMIT = 1.0 - 1e-4


class S4DBlock(Layer):
    """
    Diagonal state-space layer: one complex SISO system of order N per channel, shared by all
    frequency bins and run causally along time.

    With A = a_real + i a_imag, dt = exp(log_dt) and B = 1, the zero-order-hold discretization
    gives lambda = exp(dt A) and beta = (lambda - 1) / A, and the recurrence

        s_t = lambda s_{t-1} + beta u_t,    y_t = Re(sum_n c_n s_t) + d u_t.

    Discretized poles on or outside the unit circle are pulled back to |lambda| = 1 - 1e-4
    and counted in `clamped_poles`, once per distinct set of pole parameters.
    """

    def __init__(
        self,
        name: str,
        channels: int,
        num_bins: int,
        rng: np.random.Generator,
        state_dim: int = 16,
        dt_min: float = 1e-3,
        dt_max: float = 1e-1,
    ) -> None:
        super().__init__(name)
        self.channels = channels
        self.num_bins = num_bins
        self.state_dim = state_dim
        self.clamped_poles = 0
        self._counted_poles: Optional[bytes] = None
        log_dt = rng.uniform(np.log(dt_min), np.log(dt_max), size=channels)
        self.add_param("log_dt", log_dt.astype(np.float32))
        self.add_param("a_real", np.full((channels, state_dim), -0.5, dtype=np.float32))
        self.add_param(
            "a_imag", np.tile(np.pi * np.arange(state_dim), (channels, 1)).astype(np.float32)
        )
        scale = np.sqrt(0.5)
        self.add_param("c_re", (scale * rng.standard_normal((channels, state_dim))).astype(np.float32))
        self.add_param("c_im", (scale * rng.standard_normal((channels, state_dim))).astype(np.float32))
        self.add_param("d", rng.standard_normal(channels).astype(np.float32))

    @property
    def complex_dtype(self) -> np.dtype:
        return np.result_type(self.dtype, np.complex64)

    def discretize(self, count: bool = True) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        ZOH-discretized poles and input gains.

        :param count: Add clamped poles to the warning counter unless these pole parameters were
            counted before. Defaults to True.
        :type count: bool
        :return: lambda (C x N), beta (C x N) and the boolean mask of clamped poles.
        :rtype: Tuple[np.ndarray, np.ndarray, np.ndarray]
        """
        p = self.params
        a = (p["a_real"] + 1j * p["a_imag"]).astype(self.complex_dtype)
        dt = np.exp(p["log_dt"])[:, None]
        lam = np.exp(dt * a)
        clamped = np.abs(lam) >= 1.0
        if clamped.any():
            lam = np.where(clamped, lam / np.abs(lam) * POLE_LIMIT, lam)
            fingerprint = b"".join(p[k].tobytes() for k in ("log_dt", "a_real", "a_imag"))
            if count and fingerprint != self._counted_poles:
                self._counted_poles = fingerprint
                self.clamped_poles += int(clamped.sum())
                self.logger.warning(
                    "%s: clamped %d unstable poles (total %d)", self.name, int(clamped.sum()), self.clamped_poles
                )
        small = np.abs(a) < 1e-12
        safe_a = np.where(small, 1.0, a)
        beta = np.where(small, dt, (lam - 1.0) / safe_a).astype(self.complex_dtype)
        return lam.astype(self.complex_dtype), beta, clamped

    def init_state(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lam, beta, _ = self.discretize()
        s = np.zeros((self.channels, self.state_dim, self.num_bins), dtype=self.complex_dtype)
        return s, lam, beta

    def step(self, x: np.ndarray, state: Any, record: bool = False) -> Tuple[np.ndarray, Any]:
        if x.shape != (self.channels, self.num_bins):
            raise DomainError(
                f"{self.name}: expected frame ({self.channels}, {self.num_bins}), got {x.shape}"
            )
        s, lam, beta = state
        s = lam[:, :, None] * s + beta[:, :, None] * x[:, None, :]
        c = (self.params["c_re"] + 1j * self.params["c_im"]).astype(self.complex_dtype)
        y = np.real(np.einsum("cn,cnf->cf", c, s)) + self.params["d"][:, None] * x
        if record:
            self._cache.append((x,))
        return np.ascontiguousarray(y.astype(x.dtype)), (s, lam, beta)

    def kernel(self, length: int) -> np.ndarray:
        """
        Impulse response Re(sum_n c_n beta_n lambda_n^k), k < length, per channel (C x length).
        """
        lam, beta, _ = self.discretize(count=False)
        c = self.params["c_re"] + 1j * self.params["c_im"]
        powers = lam[:, :, None] ** np.arange(length)
        return np.real(np.einsum("cn,cnk->ck", c * beta, powers))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        u = self._recorded()
        t = u.shape[0]
        lam, beta, clamped = self.discretize(count=False)
        p = self.params
        c = (p["c_re"] + 1j * p["c_im"]).astype(self.complex_dtype)
        w = c * beta
        n = np.arange(t)
        powers = lam[:, :, None] ** n
        kernel = np.real(np.einsum("cn,cnk->ck", w, powers))

        size = 2 * t
        grad_f = np.fft.rfft(grad, size, axis=0)
        u_f = np.fft.rfft(u, size, axis=0)
        k_f = np.fft.rfft(kernel.T, size, axis=0)[:, :, None]
        dkernel = np.fft.irfft(grad_f * np.conj(u_f), size, axis=0)[:t].sum(axis=2).T
        du = np.fft.irfft(grad_f * np.conj(k_f), size, axis=0)[:t]
        du = du + p["d"][None, :, None] * grad
        self.grads["d"] += (grad * u).sum(axis=(0, 2)).astype(p["d"].dtype)

        w_bar = np.einsum("ck,cnk->cn", dkernel, np.conj(powers))
        shifted = np.concatenate([np.zeros_like(powers[:, :, :1]), powers[:, :, :-1]], axis=2)
        lam_bar = np.einsum("ck,cnk->cn", dkernel, np.conj(n * w[:, :, None] * shifted))
        c_bar = np.conj(beta) * w_bar
        beta_bar = np.conj(c) * w_bar

        a = (p["a_real"] + 1j * p["a_imag"]).astype(self.complex_dtype)
        dt = np.exp(p["log_dt"])[:, None]
        small = np.abs(a) < 1e-12
        safe_a = np.where(small, 1.0, a)
        dlam_da = dt * lam
        dbeta_da = np.where(small, dt**2 / 2.0, (dt * lam * a - (lam - 1.0)) / safe_a**2)
        dlam_ddt = a * lam
        dbeta_ddt = lam
        a_bar = np.conj(dlam_da) * lam_bar + np.conj(dbeta_da) * beta_bar
        ddt = np.real(np.conj(dlam_ddt) * lam_bar + np.conj(dbeta_ddt) * beta_bar)
        a_bar = np.where(clamped, 0.0, a_bar)
        ddt = np.where(clamped, 0.0, ddt)

        self.grads["c_re"] += np.real(c_bar).astype(p["c_re"].dtype)
        self.grads["c_im"] += np.imag(c_bar).astype(p["c_im"].dtype)
        self.grads["a_real"] += np.real(a_bar).astype(p["a_real"].dtype)
        self.grads["a_imag"] += np.imag(a_bar).astype(p["a_imag"].dtype)
        self.grads["log_dt"] += (dt[:, 0] * ddt.sum(axis=1)).astype(p["log_dt"].dtype)
        return du.astype(u.dtype)

    def macs_per_frame(self) -> int:
        return 8 * self.channels * self.state_dim * self.num_bins + self.channels * self.num_bins
