# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import itertools
import json
import logging
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence

from echolab.aec import FusionMode
from echolab.config import ExperimentConfig
from echolab.pipeline import stages
from echolab.pipeline.dataset import list_split, synthesize_dataset, verify_scenario


class OperationType(Enum):
    """
    Enum to represent the pipeline stages; used as unique identifiers in run records.
    """

    synthesize: int = 0
    train_ssdoa: int = 1
    train_aec: int = 2
    infer: int = 3
    evaluate: int = 4
    verify: int = 5
    report: int = 6


@dataclass
class RunContext:
    """
    State shared by the operations of one run: the resolved config and the artifacts written so far.
    """

    config: ExperimentConfig
    ssdoa_checkpoint: Optional[str] = None
    aec_checkpoints: Dict[str, str] = field(default_factory=dict)
    artifacts: Dict[str, Any] = field(default_factory=dict)
    mismatches: List[str] = field(default_factory=list)


class Operation(ABC):
    """
    Abstract base class that defines the interface for all pipeline stages.
    """

    _ids: Iterator[int] = itertools.count(0)

    operation_type: OperationType = None

    def __init__(self) -> None:
        """
        Initializes a new Operation instance with a unique id, and empty predecessors and successors.
        """
        self.logger: logging.Logger = logging.getLogger(self.__class__.__name__)
        self.id: int = next(Operation._ids)
        self.predecessors: List[Operation] = []
        self.successors: List[Operation] = []
        self.executed: bool = False
        self.result: Dict[str, Any] = {}
        self.elapsed_s: float = 0.0

    def can_be_executed(self) -> bool:
        """
        Checks if the operation can be executed based on its predecessors.

        :return: True if all predecessors have been executed, False otherwise.
        :rtype: bool
        """
        return all(predecessor.executed for predecessor in self.predecessors)

    def add_predecessor(self, operation: Operation) -> None:
        """
        Add a preceding operation and update the relationships.

        :param operation: The operation to be set as a predecessor.
        :type operation: Operation
        """
        self.predecessors.append(operation)
        operation.successors.append(self)

    def add_successor(self, operation: Operation) -> None:
        """
        Add a succeeding operation and update the relationships.

        :param operation: The operation to be set as a successor.
        :type operation: Operation
        """
        self.successors.append(operation)
        operation.predecessors.append(self)

    def execute(self, context: RunContext) -> None:
        """
        Execute the operation, assuring that all predecessors have been executed.

        :param context: Shared run state; the operation records its artifacts there.
        :type context: RunContext
        :raises AssertionError: If not all predecessors have been executed.
        """
        assert self.can_be_executed(), "Not all predecessors have been executed"
        self.logger.info("Executing operation %d of type %s", self.id, self.operation_type)
        started = time.perf_counter()
        self.result = self._execute(context) or {}
        self.elapsed_s = time.perf_counter() - started
        self.logger.debug("Operation %d executed in %.1f s", self.id, self.elapsed_s)
        self.executed = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "operation": self.operation_type.name,
            "predecessors": [p.id for p in self.predecessors],
            "executed": self.executed,
            "elapsed_s": self.elapsed_s,
            "result": self.result,
        }

    @abstractmethod
    def _execute(self, context: RunContext) -> Optional[Dict[str, Any]]:
        """
        Abstract method for the actual work of the stage.

        :param context: Shared run state.
        :type context: RunContext
        :return: A JSON-serializable summary of what the stage produced.
        :rtype: Optional[Dict[str, Any]]
        """
        pass


class Synthesize(Operation):
    """
    Renders the train/val/test splits of the training policy and the test split of every other
    test policy.
    """

    operation_type: OperationType = OperationType.synthesize

    def __init__(self, policies: Optional[Sequence[str]] = None) -> None:
        super().__init__()
        self.policies = list(policies) if policies else None

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        synth = context.config.synth
        policies = self.policies or list(dict.fromkeys([synth.policy, *synth.test_policies]))
        written = {}
        for policy in policies:
            counts = {"test": synth.test_count}
            if policy == synth.policy:
                counts.update(train=synth.train_count, val=synth.val_count)
            index = synthesize_dataset(context.config, policy, counts)
            written[policy] = {split: len(ids) for split, ids in index["splits"].items()}
        context.artifacts["datasets"] = written
        return {"datasets": written}


class TrainSsDoa(Operation):
    operation_type: OperationType = OperationType.train_ssdoa

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        context.ssdoa_checkpoint = stages.train_ssdoa(context.config)
        return {"checkpoint": context.ssdoa_checkpoint}


class TrainAec(Operation):
    """
    Trains the AEC of one fusion mode; modes E, ET and ETA run after TrainSsDoa.
    """

    operation_type: OperationType = OperationType.train_aec

    def __init__(self, mode: str) -> None:
        super().__init__()
        self.mode = FusionMode(mode).value

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        path = stages.train_aec(context.config, self.mode, context.ssdoa_checkpoint)
        context.aec_checkpoints[self.mode] = path
        return {"mode": self.mode, "checkpoint": path}


class Evaluate(Operation):
    operation_type: OperationType = OperationType.evaluate

    def __init__(self, test_policies: Optional[Sequence[str]] = None) -> None:
        super().__init__()
        self.test_policies = list(test_policies) if test_policies else None

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        out_dir = os.path.join(context.config.paths.run_dir, "eval")
        table = stages.evaluate(
            context.config, context.aec_checkpoints, context.ssdoa_checkpoint, self.test_policies, out_dir
        )
        context.artifacts["eval_dir"] = out_dir
        return {"out_dir": out_dir, "rows": len(table)}


class Infer(Operation):
    """
    Streams the first test scenario of the training policy through SS-DOA and, when trained,
    the AEC of the configured mode.
    """

    operation_type: OperationType = OperationType.infer

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        config = context.config
        scenarios = list_split(config, config.synth.policy, "test")
        assert context.ssdoa_checkpoint is not None, "Infer must follow TrainSsDoa"
        if not scenarios:
            self.logger.warning("No test scenario to stream")
            return {}
        record = stages.infer(
            config,
            scenarios[0],
            context.ssdoa_checkpoint,
            context.aec_checkpoints.get(config.aec.mode),
            os.path.join(config.paths.run_dir, "infer"),
        )
        context.artifacts["infer"] = record
        return record


class Verify(Operation):
    """
    Re-renders up to `limit` scenarios of a split and byte-compares them with the files on disk.
    """

    operation_type: OperationType = OperationType.verify

    def __init__(self, split: str = "test", limit: int = 2) -> None:
        super().__init__()
        self.split = split
        self.limit = limit

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        config = context.config
        checked = {}
        for directory in list_split(config, config.synth.policy, self.split)[: self.limit]:
            ok, mismatched = verify_scenario(directory, config)
            checked[os.path.basename(directory)] = mismatched
            if not ok:
                context.mismatches.append(directory)
        return {"checked": checked}


class Report(Operation):
    """
    Writes the complexity report of SS-DOA and of every AEC mode.
    """

    operation_type: OperationType = OperationType.report

    def _execute(self, context: RunContext) -> Dict[str, Any]:
        report = stages.complexity(context.config)
        os.makedirs(context.config.paths.run_dir, exist_ok=True)
        path = os.path.join(context.config.paths.run_dir, "complexity.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
        self.logger.info("Complexity:\n%s", stages.complexity_table(report))
        context.artifacts["complexity"] = path
        return {name: {"params": entry["params"], "macs_per_second": entry["macs_per_second"]} for name, entry in report.items()}
