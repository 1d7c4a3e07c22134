# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
import os
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from echolab.errors import NumericError
from echolab.jsonl import append_jsonl, read_jsonl, write_jsonl
from echolab.neuralcore.checkpoint import load_checkpoint, save_checkpoint
from echolab.neuralcore.model import Model
from echolab.neuralcore.optim import Adam, PlateauSchedule, ScheduleDecision


class TrainingTask(ABC):
    """
    Abstract base class of a supervised objective over a model.
    """

    def __init__(self, model: Model) -> None:
        self.model = model
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def loss(self, sample: Any, backward: bool = True) -> float:
        """
        Compute the loss of one sample and, if requested, accumulate its gradients.

        :param sample: One training example.
        :type sample: Any
        :param backward: Accumulate parameter gradients. Defaults to True.
        :type backward: bool
        :return: Loss value.
        :rtype: float
        """
        pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 4
    lr: float = 1e-3
    patience: int = 2
    factor: float = 0.5
    early_stop: int = 10
    seed: int = 0
    show_progress: bool = False


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    decision: str
    best: float


class Trainer:
    """
    Epoch loop with deterministic shuffling, Adam, plateau halving, early stopping, a JSON-lines
    log and resumable checkpoints.

    Run directory contents: train_log.jsonl, last.ckpt (parameters, Adam moments, schedule) and
    best.ckpt (parameters of the best validation epoch).
    """

    LOG = "train_log.jsonl"
    LAST = "last.ckpt"
    BEST = "best.ckpt"

    def __init__(
        self,
        task: TrainingTask,
        config: TrainConfig = TrainConfig(),
        run_dir: Optional[str] = None,
        meta: Optional[Dict] = None,
    ) -> None:
        """
        Initializes a new Trainer instance.

        :param task: Objective and model to train.
        :type task: TrainingTask
        :param config: Loop settings. Defaults to TrainConfig().
        :type config: TrainConfig
        :param run_dir: Directory for log and checkpoints; nothing is written when None.
        :type run_dir: Optional[str]
        :param meta: Extra metadata embedded in checkpoint headers (e.g. the resolved config).
        :type meta: Optional[Dict]
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.task = task
        self.model = task.model
        self.config = config
        self.run_dir = run_dir
        self.meta = meta or {}
        self.optimizer = Adam(lr=config.lr)
        self.schedule = PlateauSchedule(
            lr=config.lr, patience=config.patience, factor=config.factor, early_stop=config.early_stop
        )
        self.epoch = 0
        self.history: List[EpochRecord] = []
        if run_dir:
            os.makedirs(run_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        return os.path.join(self.run_dir, name)

    def checkpoint_meta(self) -> Dict:
        return {
            "model": self.model.describe(),
            "epoch": self.epoch,
            "schedule": self.schedule.to_dict(),
            "adam_t": self.optimizer.t,
            "record": asdict(self.history[-1]) if self.history else None,
            "train": asdict(self.config),
            **self.meta,
        }

    def save(self, name: str, with_optimizer: bool) -> None:
        tensors = self.model.state_dict()
        if with_optimizer:
            tensors.update(self.optimizer.moments())
        save_checkpoint(self._path(name), tensors, self.checkpoint_meta())

    def resume(self) -> bool:
        """
        Continue from run_dir/last.ckpt when it exists.

        :return: True if a checkpoint was loaded.
        :rtype: bool
        """
        if not self.run_dir or not os.path.exists(self._path(self.LAST)):
            return False
        tensors, meta = load_checkpoint(self._path(self.LAST))
        params = {k: v for k, v in tensors.items() if not k.startswith("adam.")}
        self.model.load_state_dict(params)
        self.optimizer.load_moments(tensors, int(meta.get("adam_t", 0)))
        self.schedule = PlateauSchedule.from_dict(meta.get("schedule"))
        self.epoch = int(meta.get("epoch", 0))
        by_epoch = {r["epoch"]: r for r in read_jsonl(self._path(self.LOG)) if 0 < r.get("epoch", 0) <= self.epoch}
        if meta.get("record"):
            by_epoch.setdefault(meta["record"]["epoch"], meta["record"])
        self.history = [EpochRecord(**by_epoch[epoch]) for epoch in sorted(by_epoch)]
        # one record per epoch up to the checkpoint
        write_jsonl(self._path(self.LOG), [asdict(record) for record in self.history])
        self.logger.info("Resumed %s at epoch %d (lr %.2e)", self.model.name, self.epoch, self.schedule.lr)
        return True

    def mean_loss(self, samples: Sequence[Any]) -> float:
        self.model.eval()
        losses = [self.task.loss(sample, backward=False) for sample in samples]
        return math.fsum(losses) / max(1, len(losses))

    def train_epoch(self, samples: Sequence[Any]) -> float:
        """
        One pass over the shuffled samples; gradients of a batch are summed in sample order and
        averaged before the Adam step.
        """
        self.model.train()
        self.model.reseed(self.epoch)
        order = np.random.default_rng([self.config.seed, self.epoch]).permutation(len(samples))
        params = self.model.parameters()
        grads = self.model.gradients()
        losses: List[float] = []
        for start in range(0, len(order), self.config.batch_size):
            batch = order[start : start + self.config.batch_size]
            self.model.zero_grad()
            for index in batch:
                value = self.task.loss(samples[int(index)], backward=True)
                if not math.isfinite(value):
                    raise NumericError(
                        "Non-finite training loss",
                        {"epoch": self.epoch, "sample": int(index), "loss": value},
                    )
                losses.append(value)
            for g in grads.values():
                g *= 1.0 / len(batch)
            self.optimizer.lr = self.schedule.lr
            self.optimizer.step(params, grads)
        return math.fsum(losses) / max(1, len(losses))

    def fit(self, train: Sequence[Any], val: Optional[Sequence[Any]] = None, resume: bool = True) -> List[EpochRecord]:
        """
        Train until the epoch budget is spent or early stopping triggers.

        :param train: Training samples.
        :type train: Sequence[Any]
        :param val: Validation samples; the training samples are used when None.
        :type val: Optional[Sequence[Any]]
        :param resume: Continue from an existing last checkpoint. Defaults to True.
        :type resume: bool
        :return: One record per finished epoch (including resumed ones).
        :rtype: List[EpochRecord]
        """
        if resume:
            self.resume()
        val = val if val is not None else train
        epochs = range(self.epoch + 1, self.config.epochs + 1)
        for epoch in tqdm(epochs, desc=self.model.name, disable=not self.config.show_progress):
            if self.schedule.stopped:
                break
            self.epoch = epoch
            lr = self.schedule.lr
            train_loss = self.train_epoch(train)
            val_loss = self.mean_loss(val)
            if not math.isfinite(val_loss):
                raise NumericError("Non-finite validation loss", {"epoch": epoch, "loss": val_loss})
            decision = self.schedule.update(val_loss)
            record = EpochRecord(epoch, train_loss, val_loss, lr, decision.value, self.schedule.best)
            self.history.append(record)
            self.logger.info(
                "%s epoch %d: train %.5f, val %.5f, lr %.2e, %s",
                self.model.name,
                epoch,
                train_loss,
                val_loss,
                lr,
                decision.value,
            )
            if self.run_dir:
                self.save(self.LAST, with_optimizer=True)
                if decision is ScheduleDecision.improved:
                    self.save(self.BEST, with_optimizer=False)
                append_jsonl(self._path(self.LOG), asdict(record))
            if decision is ScheduleDecision.stop:
                self.logger.info("%s: early stop at epoch %d", self.model.name, epoch)
                break
        self.model.eval()
        return self.history
