from .track import (
    NUM_DIRECTIONS,
    DirectionSet,
    DoaLabelTrack,
    activity,
    decode_predictions,
    encode_direction_sets,
    frame_rms,
    make_labels,
    one_hot,
    presence,
    presence_probabilities,
    presence_to_sets,
)
from .sidecar import FORMAT, label_summary, load_labels, save_labels, summary_path
