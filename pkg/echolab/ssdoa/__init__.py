from .model import (
    REFERENCE_MACS_PER_SECOND,
    REFERENCE_PARAMS,
    CrBlockSpec,
    SsDoaConfig,
    SsDoaModel,
    SsDoaOutput,
    build_ssdoa,
    load_ssdoa,
)
from .stream import StreamRecord, StreamSession, iterate_frames, stream_infer
from .task import DoaSample, DoaTask, frame_f1, predicted_tracks
