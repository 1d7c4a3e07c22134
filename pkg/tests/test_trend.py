# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import math

import pytest

from echolab.eval.trend import TrendResult, directional_benefit_trend


def test_majority_verdict():
    assert TrendResult("none", ["ET"], wins=[True, True, False]).holds
    assert not TrendResult("none", ["ET"], wins=[True, False]).holds
    assert TrendResult("none", ["ET"], wins=[True]).to_dict()["holds"] is True


@pytest.mark.slow
def test_trend_reports_every_mode(tiny_config):
    result = directional_benefit_trend(tiny_config, seeds=[0], modes=["ET"], train_count=2, test_count=1)
    assert result.baseline == "none" and result.modes == ["ET"]
    (losses,) = result.losses
    assert set(losses) == {"none", "ET"}
    assert all(math.isfinite(v) for v in losses.values())
    assert len(result.wins) == 1
