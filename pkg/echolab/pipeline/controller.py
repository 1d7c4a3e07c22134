# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import logging
import os
from typing import Any, Dict, List, Optional

from echolab.config import ExperimentConfig
from echolab.jsonl import json_default
from echolab.pipeline.graph_of_operations import GraphOfOperations
from echolab.pipeline.operations import RunContext


class Controller:
    """
    Controller class to manage the execution flow of the Graph of Operations over one shared
    run context.
    """

    RECORD = "pipeline_run.json"

    def __init__(self, config: ExperimentConfig, graph: GraphOfOperations) -> None:
        """
        Initialize the Controller instance with the resolved configuration and the operations graph.

        :param config: Resolved experiment configuration.
        :type config: ExperimentConfig
        :param graph: The Graph of Operations to be executed.
        :type graph: GraphOfOperations
        """
        self.logger = logging.getLogger(self.__class__.__module__)
        self.config = config
        self.graph = graph
        self.context = RunContext(config)
        self.run_executed = False

    def run(self) -> RunContext:
        """
        Execute the operations in FIFO order as they become ready.

        :return: The run context with all artifacts.
        :rtype: RunContext
        :raises AssertionError: If the Graph of Operation has no roots.
        :raises AssertionError: If the successor of an operation is not in the Graph of Operations.
        """
        self.logger.debug("Checking that the program is in a valid state")
        assert self.graph.roots, "The operations graph has no root"
        execution_queue = [operation for operation in self.graph.operations if operation.can_be_executed()]
        queued = set(id(operation) for operation in execution_queue)
        while execution_queue:
            current_operation = execution_queue.pop(0)
            current_operation.execute(self.context)
            self.logger.info("Operation %s executed", current_operation.operation_type)
            for operation in current_operation.successors:
                assert operation in self.graph.operations, "The successor of an operation is not in the operations graph"
                if id(operation) not in queued and operation.can_be_executed():
                    execution_queue.append(operation)
                    queued.add(id(operation))
        self.logger.info("All operations executed")
        self.run_executed = True
        return self.context

    def run_record(self) -> Dict[str, Any]:
        operations: List[Dict[str, Any]] = [operation.to_dict() for operation in self.graph.operations]
        return {
            "operations": operations,
            "artifacts": {
                "ssdoa_checkpoint": self.context.ssdoa_checkpoint,
                "aec_checkpoints": self.context.aec_checkpoints,
                **self.context.artifacts,
            },
            "mismatches": self.context.mismatches,
            "config": self.config.to_dict(),
        }

    def output_graph(self, path: Optional[str] = None) -> str:
        """
        Serialize the state and results of the operations graph to a JSON file.

        :param path: The path to the output file. Defaults to <run_dir>/pipeline_run.json.
        :type path: Optional[str]
        :return: The path written.
        :rtype: str
        :raises AssertionError: If the `run` method hasn't been executed yet.
        """
        assert self.run_executed, "The run method has not been executed"
        path = path or os.path.join(self.config.paths.run_dir, self.RECORD)
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.run_record(), file, ensure_ascii=False, indent=2, default=json_default)
        return path
