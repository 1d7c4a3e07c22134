from .scenario import (
    ScenarioPolicy,
    TalkPattern,
    SourceKind,
    RoomSpec,
    ArraySpec,
    SourcePlacement,
    TalkerSegment,
    Scenario,
    scenario_id,
    unit_vector,
    direction_to_grid_index,
)
from .sampling import (
    RoomBounds,
    DEFAULT_BOUNDS,
    make_rng,
    sample_room,
    centered_array,
    max_source_distance,
    sample_scenario,
    talker_trajectory,
)
from .manifest import SCHEMA, to_manifest, from_manifest, save_manifest, load_manifest
