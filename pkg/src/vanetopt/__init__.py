"""Temporal-aware multi-objective optimization of V2V relay selection."""

from .channel import (
    ChannelParams,
    LinkEnvironment,
    ShadowField,
    doppler_factor,
    path_loss_db,
    received_power,
    sinr,
    thermal_noise,
)
from .encoding import (
    Bounds,
    GeneBlock,
    Genome,
    adapt_dimension,
    random_genome,
    repair_relays,
)
from .evolution import (
    EvoParams,
    Individual,
    adaptive_mutation,
    crowding_distance,
    non_dominated_sort,
    run_generation,
    sbx_crossover,
    tournament_select,
)
from .objectives import (
    ObjectiveVector,
    QosThresholds,
    eval_constraints,
    eval_delay,
    eval_link_quality,
    eval_load,
    eval_stability,
    evaluate,
)
from .oracle import TinyInstance, enumerate_front, hypervolume
from .temporal import (
    InheritanceConfig,
    SecondResult,
    initialize_population,
    run_scenario,
    run_second,
    select_inheritance,
)
from .trajectory import (
    ScenarioSpec,
    Snapshot,
    VehicleState,
    distance,
    load_trajectory,
    synthesize_scenario,
)

__version__ = "0.1.0"
