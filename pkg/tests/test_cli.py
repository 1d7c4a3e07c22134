# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json
import os

import pytest

from echolab.cli import EXIT_CONFIG, EXIT_MISMATCH, EXIT_OK, aec_checkpoints, build_parser, main, overrides, split_counts
from echolab.config import load_config
from echolab.errors import ConfigError
from echolab.pipeline import FILES, list_split


def _sets(tiny_overrides):
    args = []
    for item in tiny_overrides:
        args += ["--set", item]
    return args


def test_split_counts():
    assert split_counts(25) == {"train": 21, "val": 2, "test": 2}
    assert split_counts(5) == {"train": 5, "val": 0, "test": 0}
    assert split_counts(4, "test") == {"test": 4}


def test_flags_become_overrides():
    args = build_parser().parse_args(["--seed", "3", "--mode", "ETA", "--set", "train.epochs=2", "synth", "--surrogate"])
    items = overrides(args)
    assert items == ["train.epochs=2", "seed=3", 'aec.mode="ETA"', "synth.surrogate=true"]
    config = load_config(overrides=items)
    assert config.seed == 3 and config.aec.mode == "ETA" and config.train.epochs == 2


def test_explicit_checkpoints_replace_the_defaults(tiny_config):
    checkpoints = aec_checkpoints(tiny_config, ["none", "ET"], ["ET=/tmp/et.ckpt"])
    assert checkpoints["ET"] == "/tmp/et.ckpt"
    assert checkpoints["none"].startswith(tiny_config.paths.run_dir)
    with pytest.raises(ConfigError):
        aec_checkpoints(tiny_config, ["none"], ["none"])


def test_configuration_errors_exit_with_two(tmp_path):
    assert main(["--set", "train.epochs", "report"]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "absent.json"), "report"]) == EXIT_CONFIG
    assert main(["--set", 'aec.mode="Q"', "report"]) == EXIT_CONFIG


def test_eval_without_checkpoints_is_a_configuration_error(tiny_overrides):
    assert main(_sets(tiny_overrides) + ["eval", "--modes", "none"]) == EXIT_CONFIG


def test_report_prints_complexity(tiny_overrides, tmp_path, capsys):
    out = tmp_path / "complexity.json"
    assert main(_sets(tiny_overrides) + ["report", "--modes", "none", "ETA", "--out", str(out)]) == EXIT_OK
    assert "aec_ETA" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert set(report) == {"ssdoa", "aec_none", "aec_ETA"}
    assert report["aec_ETA"]["params"] > report["aec_none"]["params"]


def test_synth_then_verify(tiny_overrides, tiny_config, capsys):
    args = _sets(tiny_overrides)
    assert main(args + ["synth", "--count", "1", "--split", "test"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out.strip()) == {"train": 0, "val": 0, "test": 1}
    assert main(args + ["verify"]) == EXIT_OK
    assert "ok" in capsys.readouterr().out

    (directory,) = list_split(tiny_config, "matched", "test")
    with open(os.path.join(directory, FILES["far_end"]), "ab") as f:
        f.write(b"\0\0\0\0")
    assert main(args + ["verify", directory]) == EXIT_MISMATCH
    assert "MISMATCH far_end.wav" in capsys.readouterr().out
