from .dataset import (
    FILES,
    SPLITS,
    ScenarioData,
    doa_inputs,
    list_split,
    load_scenario,
    load_split,
    scenario_seed,
    synthesize_dataset,
    synthesize_scenario,
    verify_scenario,
    write_scenario,
)
from . import stages
from .operations import (
    OperationType,
    Operation,
    RunContext,
    Synthesize,
    TrainSsDoa,
    TrainAec,
    Infer,
    Evaluate,
    Verify,
    Report,
)
from .graph_of_operations import GraphOfOperations, build_pipeline
from .controller import Controller
