# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import filecmp
import glob
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from echolab.acoustics import read_wave, render_mixture, speech_surrogate, write_wave
from echolab.config import ExperimentConfig, from_dict
from echolab.dsp import SpectroTensor, mic_far_features, stft
from echolab.errors import ConfigError
from echolab.labels import DoaLabelTrack, load_labels, make_labels, save_labels
from echolab.scenario import Scenario, ScenarioPolicy, load_manifest, sample_scenario, save_manifest
from echolab.ssdoa import DoaSample

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
FILES = {
    "manifest": "scenario.json",
    "mixture": "mixture.wav",
    "far_end": "far_end.wav",
    "near_direct": "near_direct.wav",
    "echo": "echo.wav",
    "labels": "labels.bin",
}


@dataclass
class ScenarioData:
    """
    The signals of one rendered scenario that training and evaluation consume.

    mixture, near_direct and echo are Q x N; far_end is N.
    """

    scenario: Scenario
    mixture: np.ndarray
    far_end: np.ndarray
    near_direct: np.ndarray
    echo: np.ndarray
    labels: DoaLabelTrack

    @property
    def scenario_id(self) -> str:
        return self.scenario.scenario_id

    def features(self, config: ExperimentConfig) -> Tuple[np.ndarray, SpectroTensor]:
        return mic_far_features(self.mixture, self.far_end, config.stft)

    def target(self, config: ExperimentConfig) -> SpectroTensor:
        return stft(self.near_direct[:1], config.stft)


def scenario_seed(base_seed: int, policy: ScenarioPolicy, split: str, index: int) -> int:
    """
    Scenario seed derived from (experiment seed, policy, split, index) through a SeedSequence.
    """
    keys = [int(base_seed), list(ScenarioPolicy).index(ScenarioPolicy(policy)), SPLITS.index(split), int(index)]
    return int(np.random.SeedSequence(keys).generate_state(1, np.uint32)[0])


def split_dir(config: ExperimentConfig, policy: str, split: str) -> str:
    return os.path.join(config.paths.data_dir, ScenarioPolicy(policy).value, split)


def index_path(config: ExperimentConfig, policy: str) -> str:
    return os.path.join(config.paths.data_dir, ScenarioPolicy(policy).value, "index.json")


def _fit(signal: np.ndarray, n: int) -> np.ndarray:
    signal = np.asarray(signal, dtype=float)
    if signal.ndim > 1:
        signal = signal[0]
    if signal.shape[0] >= n:
        return signal[:n]
    return np.pad(signal, (0, n - signal.shape[0]))


def source_signals(scn: Scenario, config: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Far-end and near-end dry signals of a scenario, drawn from its seed.

    :raises ConfigError: If no speech directory is configured and the surrogate is disabled, or
        the directory holds fewer than two WAV files.
    """
    fs = config.stft.fs
    n = int(round(scn.duration_s * fs))
    rng = np.random.default_rng([scn.rng_seed, 1])
    if config.synth.surrogate:
        far_end = speech_surrogate(scn.duration_s, fs, rng)
        near = speech_surrogate(scn.duration_s, fs, rng)
        return _fit(far_end, n), _fit(near, n)
    speech_dir = config.paths.speech_dir
    if not speech_dir or not os.path.isdir(speech_dir):
        raise ConfigError("A speech directory is required unless the surrogate is enabled")
    files = sorted(glob.glob(os.path.join(speech_dir, "**", "*.wav"), recursive=True))
    if len(files) < 2:
        raise ConfigError(f"{speech_dir} must hold at least two WAV files")
    far_index, near_index = rng.choice(len(files), size=2, replace=False)
    return _fit(read_wave(files[far_index], fs), n), _fit(read_wave(files[near_index], fs), n)


def synthesize_scenario(policy: str, seed: int, config: ExperimentConfig) -> ScenarioData:
    """
    Sample, render and label one scenario; a pure function of its arguments.
    """
    scn = sample_scenario(
        policy,
        seed,
        talk_pattern=config.synth.talk_pattern,
        duration_s=config.synth.duration_s,
        num_mics=config.synth.num_mics,
        diameter_m=config.synth.diameter_m,
    )
    far_end, near = source_signals(scn, config)
    render = render_mixture(scn, far_end, near, settings=config.render_settings())
    labels = make_labels(
        scn,
        render.dry_sources,
        config.stft,
        config.labels.threshold_db,
        config.labels.floor,
        config.labels.num_directions,
    )
    return ScenarioData(
        scenario=scn,
        mixture=render.y.samples,
        far_end=render.far_end.samples[0],
        near_direct=render.s_d.samples,
        echo=render.e_sum.samples,
        labels=labels,
    )


def write_scenario(data: ScenarioData, directory: str, config: ExperimentConfig) -> None:
    os.makedirs(directory, exist_ok=True)
    fs, subtype = config.stft.fs, config.synth.subtype
    save_manifest(data.scenario, os.path.join(directory, FILES["manifest"]))
    write_wave(os.path.join(directory, FILES["mixture"]), data.mixture, fs, subtype)
    write_wave(os.path.join(directory, FILES["far_end"]), data.far_end, fs, subtype)
    write_wave(os.path.join(directory, FILES["near_direct"]), data.near_direct, fs, subtype)
    write_wave(os.path.join(directory, FILES["echo"]), data.echo, fs, subtype)
    save_labels(data.labels, os.path.join(directory, FILES["labels"]))


def load_scenario(directory: str, config: ExperimentConfig) -> ScenarioData:
    """
    Read a scenario directory written by write_scenario.

    :raises ConfigError: If a file is missing or unreadable.
    """
    for name in FILES.values():
        if not os.path.exists(os.path.join(directory, name)):
            raise ConfigError(f"{directory} lacks {name}")
    fs = config.stft.fs
    return ScenarioData(
        scenario=load_manifest(os.path.join(directory, FILES["manifest"])),
        mixture=np.atleast_2d(read_wave(os.path.join(directory, FILES["mixture"]), fs)),
        far_end=read_wave(os.path.join(directory, FILES["far_end"]), fs),
        near_direct=np.atleast_2d(read_wave(os.path.join(directory, FILES["near_direct"]), fs)),
        echo=np.atleast_2d(read_wave(os.path.join(directory, FILES["echo"]), fs)),
        labels=load_labels(os.path.join(directory, FILES["labels"])),
    )


def _synthesize_job(job: Tuple[str, int, str, Dict]) -> Tuple[str, str]:
    policy, seed, directory, doc = job
    config = from_dict(doc)
    data = synthesize_scenario(policy, seed, config)
    path = os.path.join(directory, data.scenario_id)
    write_scenario(data, path, config)
    return data.scenario_id, path


def synthesize_dataset(
    config: ExperimentConfig, policy: Optional[str] = None, counts: Optional[Dict[str, int]] = None
) -> Dict:
    """
    Render the train/val/test splits of one policy and write their index.

    :param config: Experiment configuration.
    :type config: ExperimentConfig
    :param policy: Scenario policy. Defaults to config.synth.policy.
    :type policy: Optional[str]
    :param counts: Scenarios per split. Defaults to the configured counts.
    :type counts: Optional[Dict[str, int]]
    :return: The index document: scenario ids per split and the resolved config.
    :rtype: Dict
    """
    policy = ScenarioPolicy(policy or config.synth.policy).value
    counts = counts or {
        "train": config.synth.train_count,
        "val": config.synth.val_count,
        "test": config.synth.test_count,
    }
    doc = config.to_dict()
    splits = [split for split in SPLITS for _ in range(counts.get(split, 0))]
    jobs = [
        (policy, scenario_seed(config.seed, policy, split, i), split_dir(config, policy, split), doc)
        for split in SPLITS
        for i in range(counts.get(split, 0))
    ]
    results: Dict[str, Tuple[str, str]] = {}
    progress = tqdm(total=len(jobs), desc=f"synth {policy}", disable=not config.train.show_progress)
    if config.synth.workers > 1:
        with ProcessPoolExecutor(max_workers=config.synth.workers) as pool:
            for split, (scn_id, path) in zip(splits, pool.map(_synthesize_job, jobs)):
                results[scn_id] = (split, path)
                progress.update()
    else:
        for split, job in zip(splits, jobs):
            scn_id, path = _synthesize_job(job)
            results[scn_id] = (split, path)
            progress.update()
    progress.close()
    index = {
        "policy": policy,
        "splits": {split: sorted(k for k, v in results.items() if v[0] == split) for split in SPLITS},
        "config": doc,
    }
    os.makedirs(os.path.dirname(index_path(config, policy)), exist_ok=True)
    with open(index_path(config, policy), "w", encoding="utf-8") as f:
        json.dump(index, f, indent=2)
    logger.info("Synthesized %d %s scenarios into %s", len(results), policy, config.paths.data_dir)
    return index


def list_split(config: ExperimentConfig, policy: str, split: str) -> List[str]:
    """
    Scenario directories of a split, from the policy index.

    :raises ConfigError: If the dataset has not been synthesized.
    """
    path = index_path(config, policy)
    if not os.path.exists(path):
        raise ConfigError(f"No dataset index at {path}; run synth first")
    with open(path, "r", encoding="utf-8") as f:
        index = json.load(f)
    return [os.path.join(split_dir(config, policy, split), scn_id) for scn_id in index["splits"].get(split, [])]


def load_split(config: ExperimentConfig, policy: str, split: str) -> List[ScenarioData]:
    return [load_scenario(directory, config) for directory in list_split(config, policy, split)]


def verify_scenario(directory: str, config: ExperimentConfig) -> Tuple[bool, List[str]]:
    """
    Re-render a scenario from its manifest and byte-compare every file.

    :return: Whether all files match, and the names of those that differ.
    :rtype: Tuple[bool, List[str]]
    """
    scn = load_manifest(os.path.join(directory, FILES["manifest"]))
    data = synthesize_scenario(scn.policy.value, scn.rng_seed, config)
    with tempfile.TemporaryDirectory() as tmp:
        write_scenario(data, tmp, config)
        names = list(FILES.values()) + [os.path.basename(p) for p in glob.glob(os.path.join(tmp, "*.json"))]
        mismatched = sorted(
            {name for name in names if not filecmp.cmp(os.path.join(tmp, name), os.path.join(directory, name), shallow=False)}
        )
    if mismatched:
        logger.warning("Scenario %s differs in %s", scn.scenario_id, mismatched)
    return not mismatched, mismatched


def doa_inputs(datasets: Sequence[ScenarioData], config: ExperimentConfig) -> List[DoaSample]:
    return [DoaSample(data.scenario_id, data.features(config)[0], data.labels) for data in datasets]
