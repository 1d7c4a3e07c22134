# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence

from echolab.aec import AecTask, DirectionalAec, FusionMode
from echolab.config import ExperimentConfig
from echolab.neuralcore import Trainer
from echolab.pipeline.dataset import doa_inputs, scenario_seed, synthesize_scenario
from echolab.pipeline.stages import aec_samples
from echolab.ssdoa import DoaTask, SsDoaModel

logger = logging.getLogger(__name__)


@dataclass
class TrendResult:
    """
    Test losses per seed and mode, and whether a directional mode beat the baseline.
    """

    baseline: str
    modes: List[str]
    losses: List[Dict[str, float]] = field(default_factory=list)
    wins: List[bool] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return sum(self.wins) * 2 > len(self.wins)

    def to_dict(self) -> Dict:
        return {"baseline": self.baseline, "modes": self.modes, "losses": self.losses, "wins": self.wins, "holds": self.holds}


def directional_benefit_trend(
    config: ExperimentConfig,
    seeds: Sequence[int] = (0, 1, 2),
    modes: Sequence[str] = ("ET", "ETA"),
    baseline: str = "none",
    train_count: int = 64,
    test_count: int = 16,
) -> TrendResult:
    """
    Toy-scale ordering experiment: for each seed, train SS-DOA and then the baseline and each
    directional mode on identical in-memory data, and compare their test losses.

    A seed counts as a win when at least one directional mode has a strictly lower test loss
    than the baseline; the trend holds on a majority of seeds. At this scale the modes may not
    separate, so the result is reported rather than enforced.

    :param config: Experiment configuration (policy, durations, training budget).
    :type config: ExperimentConfig
    :param seeds: Experiment seeds. Defaults to three.
    :type seeds: Sequence[int]
    :param modes: Directional modes compared with the baseline. Defaults to ET and ETA.
    :type modes: Sequence[str]
    :param baseline: Mode without directional input. Defaults to none.
    :type baseline: str
    :param train_count: Toy training scenarios per seed. Defaults to 64.
    :type train_count: int
    :param test_count: Toy test scenarios per seed. Defaults to 16.
    :type test_count: int
    :return: Per-seed losses, wins and the majority verdict.
    :rtype: TrendResult
    """
    result = TrendResult(FusionMode(baseline).value, [FusionMode(m).value for m in modes])
    policy = config.synth.policy
    for seed in seeds:
        cfg = replace(config, seed=int(seed))
        train = [synthesize_scenario(policy, scenario_seed(seed, policy, "train", i), cfg) for i in range(train_count)]
        test = [synthesize_scenario(policy, scenario_seed(seed, policy, "test", i), cfg) for i in range(test_count)]
        ssdoa = SsDoaModel(cfg.ssdoa_config())
        Trainer(DoaTask(ssdoa), cfg.train_config()).fit(doa_inputs(train, cfg))
        losses: Dict[str, float] = {}
        for mode in [result.baseline, *result.modes]:
            direction_model = ssdoa if FusionMode(mode).uses_ssdoa else None
            model = DirectionalAec(cfg.iscrn_config(mode))
            trainer = Trainer(AecTask(model, cfg.aec.power), cfg.train_config())
            trainer.fit(aec_samples(train, cfg, mode, direction_model))
            losses[mode] = trainer.mean_loss(aec_samples(test, cfg, mode, direction_model))
        win = any(losses[mode] < losses[result.baseline] for mode in result.modes)
        result.losses.append(losses)
        result.wins.append(win)
        logger.info("Seed %d test losses %s (directional win: %s)", seed, losses, win)
    logger.info("Directional benefit on %d of %d seeds", sum(result.wins), len(result.wins))
    return result
