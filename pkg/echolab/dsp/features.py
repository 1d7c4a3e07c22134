# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from typing import Optional, Tuple

import numpy as np

from echolab.dsp.stft import SpectroTensor, StftConfig, ri_pack, stft
from echolab.errors import DomainError


def mic_far_features(
    mixture: np.ndarray, far_end: np.ndarray, config: Optional[StftConfig] = None
) -> Tuple[np.ndarray, SpectroTensor]:
    """
    Network input stacking the RI planes of the Q microphones and of the far-end signal.

    :param mixture: Microphone signals, Q x N.
    :type mixture: np.ndarray
    :param far_end: Far-end signal, N.
    :type far_end: np.ndarray
    :param config: STFT framing. Defaults to StftConfig().
    :type config: Optional[StftConfig]
    :return: The (2Q + 2) x T x F real input and the mixture spectrogram.
    :rtype: Tuple[np.ndarray, SpectroTensor]
    :raises DomainError: If the signals differ in length.
    """
    config = config or StftConfig()
    mixture = np.atleast_2d(np.asarray(mixture, dtype=float))
    far_end = np.asarray(far_end, dtype=float).reshape(-1)
    if mixture.shape[-1] != far_end.shape[0]:
        raise DomainError(
            f"Mixture has {mixture.shape[-1]} samples but far end has {far_end.shape[0]}"
        )
    mix_spec = stft(mixture, config)
    far_spec = stft(far_end, config)
    return ri_pack([mix_spec, far_spec]), mix_spec
