# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import os

import numpy as np
import pytest

from echolab.config import load_config
from echolab.errors import ConfigError
from echolab.eval import MIXTURE_MODE, read_reports
from echolab.pipeline import (
    FILES,
    Controller,
    Evaluate,
    GraphOfOperations,
    Operation,
    OperationType,
    Report,
    Synthesize,
    TrainAec,
    TrainSsDoa,
    Verify,
    build_pipeline,
    list_split,
    load_scenario,
    scenario_seed,
    synthesize_dataset,
    synthesize_scenario,
    verify_scenario,
    write_scenario,
)


def test_scenario_seeds_are_stable_and_distinct():
    assert scenario_seed(0, "matched", "train", 3) == scenario_seed(0, "matched", "train", 3)
    seeds = {
        scenario_seed(0, "matched", "train", 0),
        scenario_seed(0, "matched", "test", 0),
        scenario_seed(0, "grid_1deg", "train", 0),
        scenario_seed(1, "matched", "train", 0),
        scenario_seed(0, "matched", "train", 1),
    }
    assert len(seeds) == 5


def test_scenario_directory_round_trip(tiny_config, tmp_path):
    data = synthesize_scenario("matched", 11, tiny_config)
    directory = str(tmp_path / data.scenario_id)
    write_scenario(data, directory, tiny_config)
    loaded = load_scenario(directory, tiny_config)
    assert loaded.scenario_id == data.scenario_id
    assert loaded.scenario.rng_seed == 11
    assert loaded.mixture.shape == data.mixture.shape == (6, 16000)
    assert np.allclose(loaded.mixture, data.mixture, rtol=1e-6, atol=1e-9)
    assert np.allclose(loaded.far_end, data.far_end, rtol=1e-6, atol=1e-9)
    assert np.array_equal(loaded.labels.talker, data.labels.talker)
    assert np.array_equal(loaded.labels.loudspeakers, data.labels.loudspeakers)
    os.remove(os.path.join(directory, FILES["echo"]))
    with pytest.raises(ConfigError):
        load_scenario(directory, tiny_config)


def test_dataset_index_and_verification(tiny_config):
    index = synthesize_dataset(tiny_config, "matched", {"train": 1, "test": 1})
    assert [len(index["splits"][s]) for s in ("train", "val", "test")] == [1, 0, 1]
    (directory,) = list_split(tiny_config, "matched", "test")
    assert os.path.basename(directory) == index["splits"]["test"][0]
    assert verify_scenario(directory, tiny_config) == (True, [])

    labels = os.path.join(directory, FILES["labels"])
    with open(labels, "rb") as f:
        payload = bytearray(f.read())
    payload[-1] ^= 0xFF
    with open(labels, "wb") as f:
        f.write(bytes(payload))
    ok, mismatched = verify_scenario(directory, tiny_config)
    assert not ok and mismatched == [FILES["labels"]]


def test_listing_needs_an_index(tiny_config):
    with pytest.raises(ConfigError):
        list_split(tiny_config, "matched", "train")


def test_surrogate_off_needs_speech(tiny_overrides):
    config = load_config(overrides=tiny_overrides + ["synth.surrogate=false"])
    with pytest.raises(ConfigError):
        synthesize_scenario("matched", 0, config)


def _by_type(graph, kind):
    return [op for op in graph.operations if isinstance(op, kind)]


def test_pipeline_wiring():
    graph = build_pipeline(["none", "ET", "B"])
    (synth,) = _by_type(graph, Synthesize)
    (verify,) = _by_type(graph, Verify)
    (ssdoa,) = _by_type(graph, TrainSsDoa)
    (evaluate,) = _by_type(graph, Evaluate)
    (report,) = _by_type(graph, Report)
    aec = {op.mode: op for op in _by_type(graph, TrainAec)}
    assert graph.roots == [synth]
    assert verify.predecessors == [synth]
    assert ssdoa.predecessors == [synth]
    assert aec["none"].predecessors == [synth] and aec["B"].predecessors == [synth]
    assert aec["ET"].predecessors == [ssdoa]
    assert set(map(id, evaluate.predecessors)) == {id(ssdoa), *(id(op) for op in aec.values())}
    assert report.predecessors == [evaluate]
    assert set(map(id, graph.leaves)) == {id(verify), id(report)}


def test_pipeline_without_synthesis_starts_at_training():
    graph = build_pipeline(["none", "ETA"], synthesize=False)
    assert {op.operation_type for op in graph.roots} == {OperationType.train_ssdoa, OperationType.train_aec}
    assert not _by_type(graph, Verify)


def test_graph_rejects_unknown_predecessors():
    graph = GraphOfOperations()
    first, second = Report(), Report()
    second.add_predecessor(first)
    with pytest.raises(AssertionError):
        graph.add_operation(second)


class _Step(Operation):
    operation_type = OperationType.report

    def __init__(self, name):
        super().__init__()
        self.name = name

    def _execute(self, context):
        context.artifacts.setdefault("order", []).append(self.name)
        return {"name": self.name}


def test_controller_runs_ready_operations_in_order(tiny_config):
    graph = GraphOfOperations()
    a, b, c, d = _Step("a"), _Step("b"), _Step("c"), _Step("d")
    graph.add_operation(a)
    b.add_predecessor(a)
    graph.add_operation(b)
    c.add_predecessor(a)
    graph.add_operation(c)
    d.add_predecessor(b)
    d.add_predecessor(c)
    graph.add_operation(d)
    controller = Controller(tiny_config, graph)
    with pytest.raises(AssertionError):
        controller.output_graph()
    context = controller.run()
    assert context.artifacts["order"] == ["a", "b", "c", "d"]
    with open(controller.output_graph(), encoding="utf-8") as f:
        record = json.load(f)
    assert [op["result"]["name"] for op in record["operations"]] == ["a", "b", "c", "d"]
    assert all(op["executed"] for op in record["operations"])
    assert record["operations"][3]["predecessors"] == [b.id, c.id]


def test_operation_waits_for_predecessors(tiny_config):
    first, second = _Step("a"), _Step("b")
    second.add_predecessor(first)
    with pytest.raises(AssertionError):
        second.execute(Controller(tiny_config, GraphOfOperations()).context)


@pytest.mark.slow
def test_full_pipeline_on_a_toy_dataset(tiny_config):
    graph = build_pipeline(list(tiny_config.aec.modes), infer=True)
    controller = Controller(tiny_config, graph)
    context = controller.run()
    assert not context.mismatches
    assert os.path.exists(context.ssdoa_checkpoint)
    assert set(context.aec_checkpoints) == {"none", "ET"}
    eval_dir = context.artifacts["eval_dir"]
    for name in ("results.csv", "summary.csv", "table.txt", "records.jsonl"):
        assert os.path.exists(os.path.join(eval_dir, name)), name
    reports = read_reports(os.path.join(eval_dir, "results.csv"))
    for report in reports:
        scored = report.doa_talker_f1 is not None and report.doa_ls_f1 is not None
        assert scored == (report.mode == MIXTURE_MODE), report.mode
    assert context.artifacts["infer"]["frames"] > 0
    assert os.path.exists(os.path.join(tiny_config.paths.run_dir, "complexity.json"))
    assert os.path.exists(controller.output_graph())
