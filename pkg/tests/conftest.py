# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import json

import pytest

from echolab.config import load_config


@pytest.fixture
def tiny_overrides(tmp_path):
    """
    A toy-sized experiment under tmp_path: one-second scenes, a handful of image sources and
    small models.
    """
    return [
        f"paths.data_dir={json.dumps(str(tmp_path / 'data'))}",
        f"paths.run_dir={json.dumps(str(tmp_path / 'runs'))}",
        "synth.duration_s=1.0",
        "synth.train_count=1",
        "synth.val_count=0",
        "synth.test_count=1",
        'synth.test_policies=["matched"]',
        "acoustics.max_order=2",
        "ssdoa.channels=3",
        "ssdoa.num_blocks=2",
        "iscrn.channels=3",
        "iscrn.encoder_blocks=2",
        "iscrn.decoder_blocks=2",
        "iscrn.s4d_state=2",
        'aec.modes=["none", "ET"]',
        "train.epochs=1",
        "train.batch_size=1",
        "train.show_progress=false",
        "eval.plot=false",
    ]


@pytest.fixture
def tiny_config(tiny_overrides):
    return load_config(overrides=tiny_overrides)
