# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json

import pytest

from echolab.config import ExperimentConfig, deep_merge, from_dict, load_config, parse_override, template
from echolab.errors import ConfigError


def test_template_resolves_to_the_defaults():
    assert load_config() == ExperimentConfig()
    assert from_dict(template()).to_dict() == template()


def test_file_values_override_the_template(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"seed": 7, "train": {"epochs": 3}, "aec": {"modes": ["none", "ET"]}}))
    config = load_config(str(path))
    assert config.seed == 7
    assert config.train.epochs == 3 and config.train.lr == 1e-3
    assert config.aec.modes == ("none", "ET")
    assert config.train_config().seed == 7


def test_command_line_overrides_win(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"train": {"epochs": 3}}))
    config = load_config(str(path), ["train.epochs=5", "paths.run_dir=/tmp/x", "synth.talk_pattern=DT"])
    assert config.train.epochs == 5
    assert config.paths.run_dir == "/tmp/x"
    assert config.synth.talk_pattern == "DT"


def test_override_values_are_json_decoded():
    assert parse_override("a.b=1.5") == (["a", "b"], 1.5)
    assert parse_override("a=true") == (["a"], True)
    assert parse_override("a=matched") == (["a"], "matched")
    with pytest.raises(ConfigError):
        parse_override("a.b")


def test_deep_merge_rejects_unknown_keys():
    base = {"a": {"b": 1}, "c": 2}
    assert deep_merge(base, {"a": {"b": 3}}) == {"a": {"b": 3}, "c": 2}
    assert base["a"]["b"] == 1
    with pytest.raises(ConfigError):
        deep_merge(base, {"a": {"z": 1}})
    with pytest.raises(ConfigError):
        deep_merge(base, {"a": 5})


@pytest.mark.parametrize(
    "override",
    [
        "synth.policy=\"nowhere\"",
        "aec.mode=\"X\"",
        "aec.power=0",
        "train.lr=-1",
        "stft.fs=8000",
        "synth.num_mics=1",
        "acoustics.reflection_method=\"image\"",
        "synth.unknown=1",
    ],
)
def test_invalid_values_raise_config_errors(override):
    with pytest.raises(ConfigError):
        load_config(overrides=[override])


def test_missing_or_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError):
        load_config(str(broken))
    listed = tmp_path / "list.json"
    listed.write_text("[]")
    with pytest.raises(ConfigError):
        load_config(str(listed))


def test_model_configs_follow_the_sections():
    config = load_config(overrides=["synth.num_mics=4", "iscrn.channels=8", "aec.mode=\"B\""])
    assert config.ssdoa_config().in_channels == 10
    iscrn = config.iscrn_config()
    assert iscrn.mode == "B" and iscrn.in_channels == 12 and iscrn.channels == 8
    assert config.iscrn_config("ETA").in_channels == 11
    assert config.render_settings().fs == 16000
