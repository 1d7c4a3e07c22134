from .rir import (
    SPEED_OF_SOUND,
    Rir,
    reflection_coefficient,
    round_half_up,
    schroeder_t60,
    simulate_rir,
)
from .loudspeaker import LoudspeakerModel, hard_clip, loudspeaker_nonlinearity
from .mixture import (
    INFINITE_RATIO,
    MixtureRender,
    MultichannelWave,
    RenderSettings,
    WaveRole,
    energy,
    render_mixture,
    segment_weights,
    ser,
)
from .surrogate import pink_noise, speech_surrogate
from .wavio import read_wave, write_wave
