# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from echolab.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StftConfig:
    """
    Framing of the short-time Fourier transform shared by labels, networks and metrics.

    The FFT size equals the window length, frames are strictly causal
    (frame t covers samples [t*hop, t*hop + win)) and only the tail is zero-padded.
    """

    win_ms: float = 20.0
    hop_ms: float = 10.0
    fs: int = 16000
    window: str = "hamming"

    def __post_init__(self) -> None:
        if self.win_length <= 0 or self.hop_length <= 0:
            raise DomainError(f"Invalid STFT framing: win={self.win_ms} ms, hop={self.hop_ms} ms")
        if self.hop_length > self.win_length:
            raise DomainError("Hop size must not exceed the window size")

    @property
    def win_length(self) -> int:
        return int(round(self.win_ms * self.fs / 1000.0))

    @property
    def hop_length(self) -> int:
        return int(round(self.hop_ms * self.fs / 1000.0))

    @property
    def fft_size(self) -> int:
        return self.win_length

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def frames_per_second(self) -> float:
        return self.fs / self.hop_length

    def frequencies(self) -> np.ndarray:
        """
        Center frequency of every stored bin in Hz.
        """
        return np.arange(self.n_bins) * self.fs / self.fft_size

    def frame_centers(self, count: int) -> np.ndarray:
        """
        Time in seconds at the center of each of the first `count` frames.
        """
        return (np.arange(count) * self.hop_length + self.win_length / 2.0) / self.fs

    def analysis_window(self) -> np.ndarray:
        return get_window(self.window, self.win_length, fftbins=True)

    def synthesis_window(self) -> np.ndarray:
        """
        Analysis window divided by the overlap-add denominator, so that
        sum_t w_a[n - t*hop] * w_s[n - t*hop] = 1 for interior samples.
        """
        w_a = self.analysis_window()
        return w_a / self.cola_denominator()

    def cola_denominator(self) -> np.ndarray:
        w_a = self.analysis_window()
        win, hop = self.win_length, self.hop_length
        denom = np.zeros(win)
        for shift in range(-(win // hop) * hop, win, hop):
            lo, hi = max(0, shift), min(win, win + shift)
            denom[lo:hi] += w_a[lo - shift : hi - shift] ** 2
        return denom

    def to_dict(self) -> Dict:
        return {"win_ms": self.win_ms, "hop_ms": self.hop_ms, "fs": self.fs, "window": self.window}

    @staticmethod
    def from_dict(doc: Dict) -> StftConfig:
        return StftConfig(**doc)


@dataclass
class SpectroTensor:
    """
    Complex spectrogram of shape channels x T x F; only non-negative bins are stored.
    """

    data: np.ndarray
    config: StftConfig = field(default_factory=StftConfig)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    @property
    def num_bins(self) -> int:
        return self.data.shape[2]

    def channel(self, index: int) -> np.ndarray:
        return self.data[index]


def num_frames(n_samples: int, config: StftConfig) -> int:
    """
    Number of causal frames for a signal of the given length.

    :param n_samples: Signal length in samples.
    :type n_samples: int
    :param config: STFT framing.
    :type config: StftConfig
    :return: ceil((N - win) / hop) + 1, or 1 for signals shorter than a window.
    :rtype: int
    """
    if n_samples <= 0:
        raise DomainError("Cannot frame an empty signal")
    win, hop = config.win_length, config.hop_length
    if n_samples <= win:
        return 1
    return int(math.ceil((n_samples - win) / hop)) + 1


def frame_signal(wave: np.ndarray, config: StftConfig) -> np.ndarray:
    """
    Cut a (channels x N) signal into causal frames without windowing.

    :return: Array of shape channels x T x win.
    :rtype: np.ndarray
    """
    wave = np.atleast_2d(np.asarray(wave))
    n = wave.shape[-1]
    t = num_frames(n, config)
    padded_len = (t - 1) * config.hop_length + config.win_length
    padded = np.zeros((wave.shape[0], padded_len), dtype=wave.dtype)
    padded[:, :n] = wave
    frames = sliding_window_view(padded, config.win_length, axis=-1)
    return frames[:, :: config.hop_length, :][:, :t, :]


def stft(wave: np.ndarray, config: Optional[StftConfig] = None) -> SpectroTensor:
    """
    Analyze a mono or multichannel wave with the causal Hamming-window STFT.

    :param wave: Signal of shape N or channels x N at config.fs.
    :type wave: np.ndarray
    :param config: STFT framing. Defaults to the 20 ms / 10 ms Hamming setup.
    :type config: Optional[StftConfig]
    :return: Spectrogram of shape channels x T x F.
    :rtype: SpectroTensor
    :raises DomainError: If the wave is empty.
    """
    config = config or StftConfig()
    wave = np.asarray(wave, dtype=np.float64)
    if wave.size == 0 or wave.shape[-1] == 0:
        raise DomainError("stft of an empty wave")
    frames = frame_signal(wave, config) * config.analysis_window()
    spec = np.fft.rfft(frames, n=config.fft_size, axis=-1)
    return SpectroTensor(spec, config)


def istft(
    spec: SpectroTensor, config: Optional[StftConfig] = None, length: Optional[int] = None
) -> np.ndarray:
    """
    Overlap-add synthesis with the COLA-normalized synthesis window.

    :param spec: Spectrogram produced by stft with a compatible config.
    :type spec: SpectroTensor
    :param config: Expected framing; must match the tensor. Defaults to the tensor's config.
    :type config: Optional[StftConfig]
    :param length: Trim or zero-extend the output to this many samples. Defaults to None.
    :type length: Optional[int]
    :return: Wave of shape channels x N.
    :rtype: np.ndarray
    :raises DomainError: If the tensor does not match the config.
    """
    config = config or spec.config
    if config != spec.config or spec.data.ndim != 3 or spec.num_bins != config.n_bins:
        raise DomainError(
            f"Spectrogram with {spec.data.shape[-1]} bins does not match config {config}"
        )
    frames = np.fft.irfft(spec.data, n=config.fft_size, axis=-1) * config.synthesis_window()
    channels, t, win = frames.shape
    hop = config.hop_length
    out = np.zeros((channels, (t - 1) * hop + win))
    for index in range(t):
        out[:, index * hop : index * hop + win] += frames[:, index, :]
    if length is not None:
        if length <= out.shape[-1]:
            out = out[:, :length]
        else:
            out = np.pad(out, ((0, 0), (0, length - out.shape[-1])))
    return out


def ri_pack(tensors: Sequence[SpectroTensor]) -> np.ndarray:
    """
    Stack real and imaginary planes of all channels of all tensors.

    Channel order is [Re(ch1), Im(ch1), Re(ch2), Im(ch2), ...].

    :param tensors: Spectrograms sharing (T, F).
    :type tensors: Sequence[SpectroTensor]
    :return: Real array of shape (2 * total channels) x T x F.
    :rtype: np.ndarray
    :raises DomainError: If the tensors disagree on (T, F).
    """
    if len(tensors) == 0:
        raise DomainError("ri_pack needs at least one tensor")
    shape = tensors[0].data.shape[1:]
    planes: List[np.ndarray] = []
    for tensor in tensors:
        if tensor.data.shape[1:] != shape:
            raise DomainError(f"Shape mismatch in ri_pack: {tensor.data.shape[1:]} vs {shape}")
        for channel in tensor.data:
            planes.append(np.real(channel))
            planes.append(np.imag(channel) if np.iscomplexobj(channel) else np.zeros_like(channel))
    return np.stack(planes, axis=0)


def ri_unpack(packed: np.ndarray, config: Optional[StftConfig] = None) -> SpectroTensor:
    """
    Inverse of ri_pack for a single packed tensor.
    """
    if packed.ndim != 3 or packed.shape[0] % 2 != 0:
        raise DomainError(f"Cannot unpack RI tensor of shape {packed.shape}")
    return SpectroTensor(packed[0::2] + 1j * packed[1::2], config or StftConfig())


def frame_energy_weights(n_samples: int, config: StftConfig) -> np.ndarray:
    """
    Per-sample weight sum_t w_a[n - t*hop]^2 seen by a wave of the given length.
    """
    t = num_frames(n_samples, config)
    w2 = config.analysis_window() ** 2
    weights = np.zeros((t - 1) * config.hop_length + config.win_length)
    for index in range(t):
        start = index * config.hop_length
        weights[start : start + config.win_length] += w2
    return weights[:n_samples]


def spectral_energy(spec: SpectroTensor) -> float:
    """
    Energy of the windowed frames recovered from the one-sided spectrum (Parseval).
    """
    mag2 = np.abs(spec.data) ** 2
    n = spec.config.fft_size
    total = mag2.sum(axis=-1) * 2.0 - mag2[..., 0]
    if n % 2 == 0:
        total = total - mag2[..., -1]
    return float(total.sum() / n)
