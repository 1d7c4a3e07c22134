# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from echolab.aec import (
    AecSample,
    AecSession,
    AecTask,
    DirectionalAec,
    FusionMode,
    beam_planes,
    enhance,
    load_aec,
    make_aec_sample,
    talker_directions,
)
from echolab.aec.model import REFERENCE_MACS_PER_SECOND as AEC_MACS
from echolab.aec.model import REFERENCE_PARAMS as AEC_PARAMS
from echolab.acoustics import write_wave
from echolab.config import ExperimentConfig
from echolab.dsp import SpectroTensor, istft
from echolab.errors import ConfigError
from echolab.eval import (
    MIXTURE_MODE,
    MetricReport,
    aggregate,
    evaluate_utterance,
    format_table,
    plot_results,
    write_reports,
)
from echolab.jsonl import append_jsonl
from echolab.neuralcore import Trainer, complexity_report
from echolab.pipeline.dataset import ScenarioData, doa_inputs, load_scenario, load_split
from echolab.ssdoa import (
    REFERENCE_MACS_PER_SECOND as SSDOA_MACS,
    REFERENCE_PARAMS as SSDOA_PARAMS,
    DoaTask,
    SsDoaModel,
    frame_f1,
    load_ssdoa,
    predicted_tracks,
    stream_infer,
)

logger = logging.getLogger(__name__)


def _best(trainer: Trainer) -> str:
    best = os.path.join(trainer.run_dir, Trainer.BEST)
    return best if os.path.exists(best) else os.path.join(trainer.run_dir, Trainer.LAST)


def train_ssdoa(config: ExperimentConfig, policy: Optional[str] = None, run_dir: Optional[str] = None) -> str:
    """
    First training stage: fit SS-DOA on the train split, validate on the val split.

    :return: Path of the best checkpoint.
    :rtype: str
    """
    policy = policy or config.synth.policy
    run_dir = run_dir or os.path.join(config.paths.run_dir, "ssdoa")
    train = doa_inputs(load_split(config, policy, "train"), config)
    if not train:
        raise ConfigError(f"The {policy} train split is empty")
    val = doa_inputs(load_split(config, policy, "val"), config) or None
    model = SsDoaModel(config.ssdoa_config())
    trainer = Trainer(DoaTask(model), config.train_config(), run_dir, meta={"config": config.to_dict()})
    trainer.fit(train, val)
    scores = frame_f1(model, val or train, config.ssdoa.threshold)
    logger.info("SS-DOA frame scores: %s", {k: round(v, 4) for k, v in scores.items()})
    return _best(trainer)


def aec_samples(
    datasets: Sequence[ScenarioData],
    config: ExperimentConfig,
    mode: FusionMode,
    ssdoa: Optional[SsDoaModel] = None,
) -> List[AecSample]:
    """
    AEC samples of a set of scenarios; the frozen SS-DOA model or the MVDR provide the
    directional input.
    """
    mode = FusionMode(mode)
    samples = []
    for data in datasets:
        features, mix_spec = data.features(config)
        beam = None
        if mode is FusionMode.B:
            directions = talker_directions(data.scenario, features.shape[1], config.stft)
            beam = beam_planes(mix_spec, data.scenario.array, directions, config.aec.mvdr_forget, config.aec.mvdr_loading)
        samples.append(make_aec_sample(data.scenario_id, features, data.target(config), mode, ssdoa, beam))
    return samples


def require_ssdoa(mode: FusionMode, ssdoa_checkpoint: Optional[str]) -> Optional[SsDoaModel]:
    if not FusionMode(mode).uses_ssdoa:
        return None
    if not ssdoa_checkpoint or not os.path.exists(ssdoa_checkpoint):
        raise ConfigError(f"Fusion mode {FusionMode(mode).value} needs a trained SS-DOA checkpoint")
    return load_ssdoa(ssdoa_checkpoint)


def train_aec(
    config: ExperimentConfig,
    mode: Optional[str] = None,
    ssdoa_checkpoint: Optional[str] = None,
    policy: Optional[str] = None,
    run_dir: Optional[str] = None,
) -> str:
    """
    Second training stage: fit the AEC of one fusion mode on top of the frozen SS-DOA model.

    :return: Path of the best checkpoint.
    :rtype: str
    :raises ConfigError: If the mode needs an SS-DOA checkpoint that does not exist.
    """
    mode = FusionMode(mode or config.aec.mode)
    policy = policy or config.synth.policy
    run_dir = run_dir or os.path.join(config.paths.run_dir, f"aec_{mode.value}")
    ssdoa = require_ssdoa(mode, ssdoa_checkpoint)
    train = aec_samples(load_split(config, policy, "train"), config, mode, ssdoa)
    if not train:
        raise ConfigError(f"The {policy} train split is empty")
    val = aec_samples(load_split(config, policy, "val"), config, mode, ssdoa) or None
    model = DirectionalAec(config.iscrn_config(mode.value))
    meta = {"config": config.to_dict(), "ssdoa_checkpoint": ssdoa_checkpoint}
    trainer = Trainer(AecTask(model, config.aec.power), config.train_config(), run_dir, meta=meta)
    trainer.fit(train, val)
    return _best(trainer)


def load_aec_for(mode: str, path: str) -> DirectionalAec:
    if not os.path.exists(path):
        raise ConfigError(f"AEC checkpoint {path} does not exist")
    model = load_aec(path)
    if model.mode is not FusionMode(mode):
        raise ConfigError(f"{path} holds an AEC of mode {model.mode.value}, not {mode}")
    return model


def _evaluate_scenario(
    data: ScenarioData,
    policy: str,
    config: ExperimentConfig,
    models: Dict[str, DirectionalAec],
    ssdoa: Optional[SsDoaModel],
    records_path: Optional[str],
) -> List[MetricReport]:
    features, mix_spec = data.features(config)
    n = data.mixture.shape[1]
    pattern = data.scenario.talk_pattern
    reference, near = data.mixture[0], data.near_direct[0]
    filter_len = config.eval.sdr_filter_len
    doa = None
    if ssdoa is not None:
        tracks = predicted_tracks(ssdoa, features, config.ssdoa.threshold)
        doa = {branch: (track, getattr(data.labels, branch)) for branch, track in tracks.items()}
    reports = [
        evaluate_utterance(data.scenario_id, policy, pattern, MIXTURE_MODE, reference, reference, near, filter_len, doa)
    ]
    for mode, model in models.items():
        sample = aec_samples([data], config, mode, ssdoa)[0]
        started = time.perf_counter()
        estimate = enhance(model, sample, config.stft, length=n)
        elapsed = time.perf_counter() - started
        report = evaluate_utterance(data.scenario_id, policy, pattern, mode, reference, estimate, near, filter_len)
        report.frames = features.shape[1]
        report.rtf = elapsed / (n / config.stft.fs)
        reports.append(report)
        if records_path:
            append_jsonl(
                records_path,
                {
                    "scenario_id": data.scenario_id,
                    "test_set": policy,
                    "mode": mode,
                    "pattern": pattern.value,
                    "erle_db": report.erle_db,
                    "sdr_db": report.sdr_db,
                    "frames": report.frames,
                    "rtf": report.rtf,
                },
            )
    return reports


def evaluate(
    config: ExperimentConfig,
    checkpoints: Dict[str, str],
    ssdoa_checkpoint: Optional[str] = None,
    test_policies: Optional[Sequence[str]] = None,
    out_dir: Optional[str] = None,
) -> pd.DataFrame:
    """
    Score every requested (mode x test set) cell on the test splits; nothing is retrained.

    :param config: Experiment configuration.
    :type config: ExperimentConfig
    :param checkpoints: AEC checkpoint per fusion mode.
    :type checkpoints: Dict[str, str]
    :param ssdoa_checkpoint: SS-DOA checkpoint for modes E, ET, ETA and the DOA scores.
    :type ssdoa_checkpoint: Optional[str]
    :param test_policies: Test sets. Defaults to config.synth.test_policies.
    :type test_policies: Optional[Sequence[str]]
    :param out_dir: Directory for results.csv, summary.csv, table.txt and results.png.
    :type out_dir: Optional[str]
    :return: The aggregated table.
    :rtype: pd.DataFrame
    :raises ConfigError: If a checkpoint is missing or holds another mode.
    """
    out_dir = out_dir or os.path.join(config.paths.run_dir, "eval")
    os.makedirs(out_dir, exist_ok=True)
    test_policies = list(test_policies or config.synth.test_policies)
    models = {mode: load_aec_for(mode, path) for mode, path in checkpoints.items()}
    needs_ssdoa = any(FusionMode(mode).uses_ssdoa for mode in models)
    ssdoa = None
    if ssdoa_checkpoint and os.path.exists(ssdoa_checkpoint):
        ssdoa = load_ssdoa(ssdoa_checkpoint)
    elif needs_ssdoa:
        raise ConfigError("Evaluating modes E, ET or ETA needs the SS-DOA checkpoint")
    records_path = os.path.join(out_dir, "records.jsonl")
    reports: List[MetricReport] = []
    for policy in test_policies:
        datasets = load_split(config, policy, "test")

        def run(data: ScenarioData, policy: str = policy) -> List[MetricReport]:
            return _evaluate_scenario(data, policy, config, models, ssdoa, records_path)

        if config.eval.workers > 1:
            with ThreadPoolExecutor(max_workers=config.eval.workers) as pool:
                keyed = dict(zip([d.scenario_id for d in datasets], pool.map(run, datasets)))
        else:
            keyed = {data.scenario_id: run(data) for data in datasets}
        for scn_id in sorted(keyed):
            reports.extend(keyed[scn_id])
        logger.info("Evaluated %d %s scenarios with modes %s", len(datasets), policy, list(models))
    write_reports(reports, os.path.join(out_dir, "results.csv"))
    expected = [(p, pattern, m) for p in test_policies for pattern in ("DT", "ST_FE", "ST_NE") for m in [MIXTURE_MODE, *models]]
    table = aggregate(reports, expected=expected)
    table.to_csv(os.path.join(out_dir, "summary.csv"), index=False)
    text = format_table(table)
    with open(os.path.join(out_dir, "table.txt"), "w", encoding="utf-8") as f:
        f.write(text + "\n")
    if config.eval.plot and not table.empty:
        plot_results(table, os.path.join(out_dir, "results.png"))
    logger.info("Results:\n%s", text)
    return table


def infer(
    config: ExperimentConfig,
    scenario_dir: str,
    ssdoa_checkpoint: str,
    aec_checkpoint: Optional[str] = None,
    out_dir: Optional[str] = None,
) -> Dict:
    """
    Frame-online inference on one scenario directory: streaming DOA records and, with an AEC
    checkpoint, the enhanced reference-microphone signal.

    :return: The per-utterance record.
    :rtype: Dict
    """
    out_dir = out_dir or os.path.join(config.paths.run_dir, "infer")
    os.makedirs(out_dir, exist_ok=True)
    data = load_scenario(scenario_dir, config)
    features, _ = data.features(config)
    n = data.mixture.shape[1]
    ssdoa = load_ssdoa(ssdoa_checkpoint)
    stream_path = os.path.join(out_dir, f"{data.scenario_id}.doa.jsonl")
    if os.path.exists(stream_path):
        os.remove(stream_path)
    started = time.perf_counter()
    records = stream_infer(ssdoa, features, config.ssdoa.threshold, stream_path)
    record = {
        "scenario_id": data.scenario_id,
        "frames": len(records),
        "doa_rtf": (time.perf_counter() - started) / (n / config.stft.fs),
    }
    if aec_checkpoint:
        aec = load_aec(aec_checkpoint)
        session = AecSession(aec, ssdoa if aec.mode.uses_ssdoa else None, data.scenario.array, config.stft, config.aec.mvdr_forget)
        directions = talker_directions(data.scenario, features.shape[1], config.stft)
        started = time.perf_counter()
        frames = [session.push(t, features[:, t, :], directions[t]) for t in range(features.shape[1])]
        spec = SpectroTensor(np.stack(frames)[None], config.stft)
        enhanced = istft(spec, length=n)[0]
        record.update(
            mode=aec.mode.value,
            rtf=(time.perf_counter() - started) / (n / config.stft.fs),
            enhanced=os.path.join(out_dir, f"{data.scenario_id}.enhanced.wav"),
        )
        write_wave(record["enhanced"], enhanced, config.stft.fs, config.synth.subtype)
        report = evaluate_utterance(
            data.scenario_id,
            data.scenario.policy.value,
            data.scenario.talk_pattern,
            aec.mode.value,
            data.mixture[0],
            enhanced,
            data.near_direct[0],
            config.eval.sdr_filter_len,
        )
        record.update(erle_db=report.erle_db, sdr_db=report.sdr_db)
    append_jsonl(os.path.join(out_dir, "records.jsonl"), record)
    logger.info("Inference on %s: %s", data.scenario_id, record)
    return record


def complexity(config: ExperimentConfig, modes: Optional[Sequence[str]] = None) -> Dict:
    """
    Parameter and MAC counts of SS-DOA and of the AEC of every mode against the reference sizes.
    """
    report = {
        "ssdoa": complexity_report(
            SsDoaModel(config.ssdoa_config()),
            config.stft,
            {"params": SSDOA_PARAMS, "macs_per_second": SSDOA_MACS},
        )
    }
    for mode in modes or config.aec.modes:
        report[f"aec_{mode}"] = complexity_report(
            DirectionalAec(config.iscrn_config(mode)),
            config.stft,
            {"params": AEC_PARAMS, "macs_per_second": AEC_MACS},
        )
    return report


def complexity_table(report: Dict) -> str:
    rows = [
        {
            "model": name,
            "params": entry["params"],
            "params_ratio": entry.get("params_ratio"),
            "gmac_per_s": entry["macs_per_second"] / 1e9,
            "macs_ratio": entry.get("macs_ratio"),
        }
        for name, entry in report.items()
    ]
    return pd.DataFrame(rows).to_string(index=False, float_format=lambda v: f"{v:.3f}")
