# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
from typing import List, Optional, Sequence

from echolab.aec import FusionMode
from echolab.pipeline.operations import (
    Evaluate,
    Infer,
    Operation,
    Report,
    Synthesize,
    TrainAec,
    TrainSsDoa,
    Verify,
)


class GraphOfOperations:
    """
    Represents the Graph of Operations, which prescribes the order of the pipeline stages.
    """

    def __init__(self) -> None:
        """
        Initializes a new Graph of Operations instance with empty operations, roots, and leaves.
        The roots are the entry points in the graph with no predecessors.
        The leaves are the exit points in the graph with no successors.
        """
        self.operations: List[Operation] = []
        self.roots: List[Operation] = []
        self.leaves: List[Operation] = []

    def append_operation(self, operation: Operation) -> None:
        """
        Appends an operation to all leaves in the graph and updates the relationships.

        :param operation: The operation to append.
        :type operation: Operation
        """
        self.operations.append(operation)
        if not self.roots:
            self.roots = [operation]
        else:
            for leaf in self.leaves:
                leaf.add_successor(operation)
        self.leaves = [operation]

    def add_operation(self, operation: Operation) -> None:
        """
        Add an operation whose predecessors are already wired; roots and leaves follow its position.

        :param operation: The operation to add.
        :type operation: Operation
        :raises AssertionError: If the first operation has predecessors or a predecessor is unknown.
        """
        if not self.roots:
            assert not operation.predecessors, "First operation should have no predecessors"
        for predecessor in operation.predecessors:
            assert predecessor in self.operations, "Predecessor is not in the operations graph"
        self.operations.append(operation)
        if not operation.predecessors:
            self.roots.append(operation)
        for predecessor in operation.predecessors:
            if predecessor in self.leaves:
                self.leaves.remove(predecessor)
        if not operation.successors:
            self.leaves.append(operation)


def build_pipeline(
    modes: Sequence[str],
    synthesize: bool = True,
    verify: bool = True,
    infer: bool = False,
    test_policies: Optional[Sequence[str]] = None,
) -> GraphOfOperations:
    """
    The standard run: synthesize, train SS-DOA, train one AEC per mode, evaluate, report.

    Modes none and B do not wait for SS-DOA training.

    :param modes: Fusion modes to train and evaluate.
    :type modes: Sequence[str]
    :param synthesize: Start with dataset synthesis. Defaults to True.
    :type synthesize: bool
    :param verify: Byte-compare a few re-rendered scenarios after synthesis. Defaults to True.
    :type verify: bool
    :param infer: Stream one test scenario after training. Defaults to False.
    :type infer: bool
    :param test_policies: Test sets of the evaluation. Defaults to the configured ones.
    :type test_policies: Optional[Sequence[str]]
    :return: The wired graph.
    :rtype: GraphOfOperations
    """
    graph = GraphOfOperations()
    head: List[Operation] = []
    if synthesize:
        synth = Synthesize()
        graph.add_operation(synth)
        head = [synth]
        if verify:
            check = Verify()
            check.add_predecessor(synth)
            graph.add_operation(check)
    ssdoa = TrainSsDoa()
    for op in head:
        ssdoa.add_predecessor(op)
    graph.add_operation(ssdoa)
    trained: List[Operation] = [ssdoa]
    for mode in modes:
        aec = TrainAec(mode)
        for op in [ssdoa] if FusionMode(mode).uses_ssdoa else head:
            aec.add_predecessor(op)
        graph.add_operation(aec)
        trained.append(aec)
    evaluate = Evaluate(test_policies)
    for op in trained:
        evaluate.add_predecessor(op)
    graph.add_operation(evaluate)
    if infer:
        stream = Infer()
        for op in trained:
            stream.add_predecessor(op)
        graph.add_operation(stream)
    report = Report()
    report.add_predecessor(evaluate)
    graph.add_operation(report)
    return graph
