# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from typing import Dict, Optional

from echolab.dsp import StftConfig
from echolab.neuralcore.model import Model


def count_params(model: Model) -> int:
    return model.count_params()


def count_macs(model: Model, seconds: float = 1.0, config: Optional[StftConfig] = None) -> int:
    """
    Analytic multiply-accumulate count for the given amount of audio.

    :param model: Built model.
    :type model: Model
    :param seconds: Audio duration. Defaults to one second.
    :type seconds: float
    :param config: Framing that sets the frame rate. Defaults to StftConfig().
    :type config: Optional[StftConfig]
    :return: MACs for `seconds` of audio.
    :rtype: int
    """
    config = config or StftConfig()
    return int(round(model.macs_per_frame() * config.frames_per_second * seconds))


def complexity_report(
    model: Model, config: Optional[StftConfig] = None, targets: Optional[Dict[str, float]] = None
) -> Dict:
    """
    Parameter and MAC counts of a model, per layer and in total, with optional reference values.
    """
    config = config or StftConfig()
    fps = config.frames_per_second
    report = {
        "model": model.name,
        "params": count_params(model),
        "macs_per_second": count_macs(model, 1.0, config),
        "layers": [
            {
                "name": layer.name,
                "type": layer.__class__.__name__,
                "params": layer.num_params(),
                "macs_per_second": int(round(layer.macs_per_frame() * fps)),
            }
            for layer in model.layers.values()
        ],
    }
    if targets:
        report["targets"] = dict(targets)
        if targets.get("params"):
            report["params_ratio"] = report["params"] / targets["params"]
        if targets.get("macs_per_second"):
            report["macs_ratio"] = report["macs_per_second"] / targets["macs_per_second"]
    return report
