from .stft import (
    StftConfig,
    SpectroTensor,
    num_frames,
    frame_signal,
    stft,
    istft,
    ri_pack,
    ri_unpack,
    frame_energy_weights,
    spectral_energy,
)
from .features import mic_far_features
