# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import copy
import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Iterable, List, Optional, Tuple

from echolab.acoustics import LoudspeakerModel, RenderSettings
from echolab.aec import FusionMode, IscrnConfig
from echolab.dsp import StftConfig
from echolab.errors import ConfigError, DomainError
from echolab.neuralcore import TrainConfig
from echolab.scenario import ScenarioPolicy, TalkPattern
from echolab.ssdoa import SsDoaConfig

logger = logging.getLogger(__name__)

TEMPLATE_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config_template.json")


@dataclass(frozen=True)
class PathsConfig:
    data_dir: str = "data"
    run_dir: str = "runs"
    speech_dir: Optional[str] = None


@dataclass(frozen=True)
class SynthConfig:
    policy: str = "matched"
    test_policies: Tuple[str, ...] = ("matched", "talker_moves", "grid_1deg", "co_directional")
    train_count: int = 64
    val_count: int = 16
    test_count: int = 16
    duration_s: float = 6.0
    surrogate: bool = True
    talk_pattern: Optional[str] = None
    num_mics: int = 6
    diameter_m: float = 0.07
    workers: int = 1
    subtype: str = "float"


@dataclass(frozen=True)
class AcousticsConfig:
    max_order: Optional[int] = 40
    rir_length_s: Optional[float] = None
    reflection_method: str = "eyring"
    crossfade_ms: float = 10.0
    clip_ratio: float = 0.8
    saturation: float = 1.5
    sigmoid_gain_pos: float = 4.0
    sigmoid_gain_neg: float = 0.5
    nonlinearity: bool = True
    workers: int = 1


@dataclass(frozen=True)
class LabelsConfig:
    threshold_db: float = -40.0
    floor: float = 1e-6
    num_directions: int = 36


@dataclass(frozen=True)
class SsDoaSection:
    channels: int = 20
    num_blocks: int = 4
    dropout: float = 0.2
    ln_affine: str = "channel_bin"
    threshold: float = 0.5


@dataclass(frozen=True)
class IscrnSection:
    channels: int = 24
    encoder_blocks: int = 3
    decoder_blocks: int = 3
    s4d_state: int = 16
    output: str = "mask"
    mask_bound: str = "tanh"
    ln_affine: str = "channel_bin"


@dataclass(frozen=True)
class AecSection:
    mode: str = "ET"
    modes: Tuple[str, ...] = ("none", "B", "E", "ET", "ETA")
    power: float = 0.5
    mvdr_forget: float = 0.98
    mvdr_loading: float = 1e-6


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 100
    batch_size: int = 4
    lr: float = 1e-3
    patience: int = 2
    factor: float = 0.5
    early_stop: int = 10
    show_progress: bool = True


@dataclass(frozen=True)
class EvalSection:
    sdr_filter_len: int = 32
    workers: int = 1
    plot: bool = True


SECTIONS = {
    "paths": PathsConfig,
    "synth": SynthConfig,
    "acoustics": AcousticsConfig,
    "stft": StftConfig,
    "labels": LabelsConfig,
    "ssdoa": SsDoaSection,
    "iscrn": IscrnSection,
    "aec": AecSection,
    "train": TrainSection,
    "eval": EvalSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Resolved experiment document; every artifact written by the command line embeds its dict.
    """

    seed: int = 0
    paths: PathsConfig = PathsConfig()
    synth: SynthConfig = SynthConfig()
    acoustics: AcousticsConfig = AcousticsConfig()
    stft: StftConfig = StftConfig()
    labels: LabelsConfig = LabelsConfig()
    ssdoa: SsDoaSection = SsDoaSection()
    iscrn: IscrnSection = IscrnSection()
    aec: AecSection = AecSection()
    train: TrainSection = TrainSection()
    eval: EvalSection = EvalSection()

    def to_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        for section in ("synth", "aec"):
            for key, value in doc[section].items():
                if isinstance(value, tuple):
                    doc[section][key] = list(value)
        return doc

    def render_settings(self) -> RenderSettings:
        a = self.acoustics
        return RenderSettings(
            fs=self.stft.fs,
            max_order=a.max_order,
            rir_length_s=a.rir_length_s,
            reflection_method=a.reflection_method,
            loudspeaker=LoudspeakerModel(
                clip_ratio=a.clip_ratio,
                saturation=a.saturation,
                sigmoid_gain_pos=a.sigmoid_gain_pos,
                sigmoid_gain_neg=a.sigmoid_gain_neg,
                enabled=a.nonlinearity,
            ),
            crossfade_ms=a.crossfade_ms,
            workers=a.workers,
        )

    def ssdoa_config(self) -> SsDoaConfig:
        s = self.ssdoa
        return SsDoaConfig(
            num_mics=self.synth.num_mics,
            channels=s.channels,
            num_bins=self.stft.n_bins,
            num_directions=self.labels.num_directions,
            num_blocks=s.num_blocks,
            dropout=s.dropout,
            ln_affine=s.ln_affine,
            seed=self.seed,
        )

    def iscrn_config(self, mode: Optional[str] = None) -> IscrnConfig:
        i = self.iscrn
        return IscrnConfig(
            num_mics=self.synth.num_mics,
            mode=FusionMode(mode or self.aec.mode).value,
            channels=i.channels,
            num_bins=self.stft.n_bins,
            encoder_blocks=i.encoder_blocks,
            decoder_blocks=i.decoder_blocks,
            s4d_state=i.s4d_state,
            num_directions=self.labels.num_directions,
            output=i.output,
            mask_bound=i.mask_bound,
            ln_affine=i.ln_affine,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(
            epochs=t.epochs,
            batch_size=t.batch_size,
            lr=t.lr,
            patience=t.patience,
            factor=t.factor,
            early_stop=t.early_stop,
            seed=self.seed,
            show_progress=t.show_progress,
        )


def deep_merge(base: Dict[str, Any], override: Dict[str, Any], path: str = "") -> Dict[str, Any]:
    """
    Recursively merge override into a copy of base; unknown keys are rejected.

    :raises ConfigError: If override names a key that base does not have.
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in merged:
            raise ConfigError(f"Unknown configuration key {where}")
        if isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = deep_merge(merged[key], value, where + ".")
        elif isinstance(merged[key], dict):
            raise ConfigError(f"Configuration key {where} must be a section")
        else:
            merged[key] = value
    return merged


def parse_override(item: str) -> Tuple[List[str], Any]:
    """
    Split "section.key=value"; the value is JSON-decoded when possible.
    """
    if "=" not in item:
        raise ConfigError(f"Override {item!r} is not of the form section.key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(doc: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    for item in overrides:
        keys, value = parse_override(item)
        nested: Dict[str, Any] = value
        for key in reversed(keys):
            nested = {key: nested}
        doc = deep_merge(doc, nested)
    return doc


def _build(cls: type, doc: Dict[str, Any], section: str) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"Unknown keys in section {section}: {sorted(unknown)}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    try:
        return cls(**values)
    except (TypeError, DomainError) as exc:
        raise ConfigError(f"Invalid section {section}: {exc}") from exc


def validate(config: ExperimentConfig) -> None:
    """
    Check value ranges and enum names of a resolved configuration.

    :raises ConfigError: On the first invalid value.
    """
    try:
        for policy in (config.synth.policy, *config.synth.test_policies):
            ScenarioPolicy(policy)
        for mode in (config.aec.mode, *config.aec.modes):
            FusionMode(mode)
        if config.synth.talk_pattern is not None:
            TalkPattern(config.synth.talk_pattern)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    checks = [
        (config.synth.num_mics >= 2, "synth.num_mics must be at least 2"),
        (config.synth.duration_s > 0, "synth.duration_s must be positive"),
        (min(config.synth.train_count, config.synth.val_count, config.synth.test_count) >= 0, "counts must be non-negative"),
        (config.synth.subtype in ("float", "pcm16"), "synth.subtype must be float or pcm16"),
        (config.stft.fs == 16000, "only 16 kHz audio is supported"),
        (config.train.epochs >= 1 and config.train.batch_size >= 1, "train.epochs and train.batch_size must be positive"),
        (config.train.lr > 0, "train.lr must be positive"),
        (0.0 < config.aec.power <= 1.0, "aec.power must lie in (0, 1]"),
        (0.0 < config.aec.mvdr_forget < 1.0, "aec.mvdr_forget must lie in (0, 1)"),
        (config.eval.sdr_filter_len >= 1, "eval.sdr_filter_len must be positive"),
        (config.acoustics.reflection_method in ("eyring", "sabine"), "acoustics.reflection_method must be eyring or sabine"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)


def from_dict(doc: Dict[str, Any]) -> ExperimentConfig:
    known = set(SECTIONS) | {"seed"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"Unknown configuration sections {sorted(unknown)}")
    sections = {name: _build(cls, doc.get(name, {}), name) for name, cls in SECTIONS.items()}
    config = ExperimentConfig(seed=int(doc.get("seed", 0)), **sections)
    validate(config)
    return config


def template() -> Dict[str, Any]:
    with open(TEMPLATE_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """
    Resolve the experiment configuration: template defaults, then the file, then overrides.

    :param path: JSON experiment document. Defaults to None (template only).
    :type path: Optional[str]
    :param overrides: "section.key=value" strings applied last.
    :type overrides: Iterable[str]
    :return: The validated configuration.
    :rtype: ExperimentConfig
    :raises ConfigError: If the file is missing or malformed or a value is invalid.
    """
    doc = template()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"Configuration file {path} does not exist")
        try:
            with open(path, "r", encoding="utf-8") as f:
                user = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        doc = deep_merge(doc, user)
        logger.debug("Loaded config from %s", path)
    doc = apply_overrides(doc, overrides)
    return from_dict(doc)
