from .fusion import FusionMode, direction_inputs, fuse_direction_info
from .model import (
    REFERENCE_MACS_PER_SECOND,
    REFERENCE_PARAMS,
    AecOutput,
    DirectionalAec,
    IscrnConfig,
    IscrnModel,
    aec_forward,
    build_iscrn,
    load_aec,
)
from .mvdr import OnlineMvdr, mvdr_online, steering_vector, talker_directions
from .task import AecSample, AecTask, beam_planes, enhance, make_aec_sample
from .stream import AecSession
