# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np

from echolab.errors import NumericError


class Adam:
    """
    Bias-corrected Adam over named parameter dictionaries.
    """

    def __init__(
        self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ) -> None:
        self.logger = logging.getLogger(self.__class__.__name__)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        """
        Update all parameters in place.

        :param params: Named parameters.
        :type params: Dict[str, np.ndarray]
        :param grads: Gradients with the same names.
        :type grads: Dict[str, np.ndarray]
        :raises NumericError: If a gradient holds NaN or Inf; nothing is updated in that case.
        """
        bad = {
            name: int(np.sum(~np.isfinite(g))) for name, g in grads.items() if not np.all(np.isfinite(g))
        }
        if bad:
            raise NumericError(
                "Non-finite gradients", {"step": self.t + 1, "lr": self.lr, "non_finite": bad}
            )
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, param in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(param)
                self.v[name] = np.zeros_like(param)
            self.m[name] *= self.beta1
            self.m[name] += (1.0 - self.beta1) * g
            self.v[name] *= self.beta2
            self.v[name] += (1.0 - self.beta2) * (g * g)
            denom = np.sqrt(self.v[name] / bc2) + self.eps
            param -= ((self.lr / bc1) * self.m[name] / denom).astype(param.dtype)

    def moments(self) -> Dict[str, np.ndarray]:
        out = {f"adam.m.{name}": value for name, value in self.m.items()}
        out.update({f"adam.v.{name}": value for name, value in self.v.items()})
        return out

    def load_moments(self, tensors: Dict[str, np.ndarray], t: int) -> None:
        self.m = {k[len("adam.m."):]: v.copy() for k, v in tensors.items() if k.startswith("adam.m.")}
        self.v = {k[len("adam.v."):]: v.copy() for k, v in tensors.items() if k.startswith("adam.v.")}
        self.t = t


class ScheduleDecision(Enum):
    improved: str = "improved"
    waiting: str = "waiting"
    halved: str = "halved"
    stop: str = "stop"


@dataclass
class PlateauSchedule:
    """
    Halve the learning rate after `patience` epochs without validation improvement, and stop
    after `early_stop` epochs without a new best.
    """

    lr: float = 1e-3
    patience: int = 2
    factor: float = 0.5
    early_stop: int = 10
    best: float = math.inf
    bad_epochs: int = 0
    stale_epochs: int = 0
    stopped: bool = False

    def update(self, val_loss: float) -> ScheduleDecision:
        """
        Feed one epoch's validation loss.

        :param val_loss: Validation loss of the finished epoch.
        :type val_loss: float
        :return: What the schedule did.
        :rtype: ScheduleDecision
        """
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
            self.stale_epochs = 0
            return ScheduleDecision.improved
        self.bad_epochs += 1
        self.stale_epochs += 1
        if self.stale_epochs >= self.early_stop:
            self.stopped = True
            return ScheduleDecision.stop
        if self.bad_epochs >= self.patience:
            self.lr *= self.factor
            self.bad_epochs = 0
            return ScheduleDecision.halved
        return ScheduleDecision.waiting

    def to_dict(self) -> Dict:
        doc = asdict(self)
        doc["best"] = None if math.isinf(self.best) else self.best
        return doc

    @staticmethod
    def from_dict(doc: Optional[Dict]) -> PlateauSchedule:
        doc = dict(doc or {})
        if doc.get("best") is None:
            doc["best"] = math.inf
        return PlateauSchedule(**doc)
