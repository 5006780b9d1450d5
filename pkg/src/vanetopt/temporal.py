"""Second-by-second orchestration with elite inheritance.

Each second re-optimizes the relay plan for the current snapshot.  A
configurable fraction of the new second's initial population is seeded
from the previous second's best solutions (adapted to the new roster), the
rest is random.  The second's outcome is summarized by the knee point of
the final non-dominated front.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, LinkEnvironment, ShadowField
from .encoding import Bounds, Genome, adapt_dimension, random_genome
from .evolution import (
    EvoParams,
    Individual,
    assign_fronts,
    run_generation,
)
from .objectives import QosThresholds, eval_link_quality, evaluate
from .rng import derive_rng
from .trajectory import Snapshot

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InheritanceConfig:
    """Fraction of each second's initial population seeded from elites."""

    gamma: float = 0.3

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class SecondMetrics:
    avg_delay_s: float
    load_variance: float
    avg_sinr: float
    path_stability: float


@dataclass
class SecondResult:
    """Outcome of one second: front, knee representative, summary metrics."""

    second_index: int
    n_vehicles: int
    front: list[Individual]
    representative: Individual
    metrics: SecondMetrics
    population: list[Individual]


def inherited_count(gamma: float, pop_size: int) -> int:
    """Number of inherited genomes: gamma * P rounded half up."""
    return int(math.floor(gamma * pop_size + 0.5))


def select_inheritance(
    prev_population: list[Individual], count: int
) -> list[Genome]:
    """Top solutions of the previous second by quality then diversity.

    Orders by non-domination rank ascending, crowding distance descending
    and population index ascending, then takes the first ``count``.
    A count beyond the population size is clamped with a warning.
    """
    if count > len(prev_population):
        logger.warning(
            "inheritance count %d exceeds population size %d; clamping",
            count,
            len(prev_population),
        )
        count = len(prev_population)
    order = sorted(
        range(len(prev_population)),
        key=lambda i: (prev_population[i].rank, -prev_population[i].crowding, i),
    )
    return [prev_population[i].genome for i in order[:count]]


def initialize_population(
    t: int,
    prev_result: SecondResult | None,
    env: LinkEnvironment,
    gamma: float,
    params: EvoParams,
    bounds: Bounds,
    thresholds: QosThresholds,
    rng: np.random.Generator,
) -> list[Individual]:
    """Generation-0 population for second ``t``.

    The first second (or a missing predecessor) starts fully random.
    Afterwards exactly ``round(gamma * P)`` genomes are inherited from the
    previous second's population, adapted to the current roster and
    repaired; the rest are fresh random genomes.  Provenance is recorded
    on each individual.
    """
    snapshot = env.snapshot
    prev_genome = prev_result.representative.genome if prev_result else None
    individuals: list[Individual] = []
    if t > 1 and prev_result is not None:
        count = inherited_count(gamma, params.pop_size)
        for genome in select_inheritance(prev_result.population, count):
            adapted = adapt_dimension(genome, snapshot, bounds, rng, env.geometry)
            individuals.append(
                Individual(
                    genome=adapted,
                    objectives=evaluate(adapted, env, prev_genome, thresholds),
                    provenance="inherited",
                )
            )
    while len(individuals) < params.pop_size:
        genome = random_genome(snapshot, bounds, rng, env.geometry)
        individuals.append(
            Individual(
                genome=genome,
                objectives=evaluate(genome, env, prev_genome, thresholds),
                provenance="random",
            )
        )
    return individuals


def knee_index(front: list[Individual]) -> int:
    """Knee point: nearest to the ideal point over min-max-normalized f1-f3.

    The stability objective is excluded from the choice.  Ties resolve to
    the lower front index.
    """
    objs = np.array(
        [(ind.objectives.f1, ind.objectives.f2, ind.objectives.f3) for ind in front]
    )
    lo = objs.min(axis=0)
    span = objs.max(axis=0) - lo
    span[span == 0.0] = 1.0
    norm = (objs - lo) / span
    return int(np.argmin(np.sqrt((norm**2).sum(axis=1))))


def run_second(
    t: int,
    snapshot: Snapshot,
    prev_result: SecondResult | None,
    *,
    run_seed: int,
    gamma: float,
    evo: EvoParams,
    bounds: Bounds,
    channel: ChannelParams,
    thresholds: QosThresholds,
) -> SecondResult:
    """Optimize one second and summarize the outcome."""
    shadow = ShadowField(run_seed, t, channel.shadow_sigma_db)
    env = LinkEnvironment(snapshot, channel, bounds.d_max, shadow)
    prev_genome = prev_result.representative.genome if prev_result else None
    delta_n = abs(len(snapshot) - prev_result.n_vehicles) if prev_result else 0

    population = initialize_population(
        t, prev_result, env, gamma, evo, bounds, thresholds,
        derive_rng(run_seed, "init", t),
    )
    assign_fronts(population)
    for gen in range(1, evo.max_generations + 1):
        population = run_generation(
            population, env, prev_genome, evo, bounds, thresholds, delta_n,
            derive_rng(run_seed, "vary", t, gen),
        )
    front = [ind for ind in population if ind.rank == 0]
    representative = front[knee_index(front)]
    _, sinr_by_link, _ = eval_link_quality(representative.genome, env)
    avg_sinr = (
        float(np.mean(list(sinr_by_link.values()))) if sinr_by_link else 0.0
    )
    metrics = SecondMetrics(
        avg_delay_s=representative.objectives.f1,
        load_variance=representative.objectives.f2,
        avg_sinr=avg_sinr,
        path_stability=representative.objectives.f4,
    )
    return SecondResult(
        second_index=snapshot.second_index,
        n_vehicles=len(snapshot),
        front=front,
        representative=representative,
        metrics=metrics,
        population=population,
    )


def run_scenario(
    snapshots: list[Snapshot],
    *,
    run_seed: int,
    gamma: float,
    evo: EvoParams,
    bounds: Bounds,
    channel: ChannelParams,
    thresholds: QosThresholds,
) -> list[SecondResult]:
    """Sequential fold of run_second over a scenario's snapshots."""
    if not snapshots:
        raise ValueError("run_scenario requires at least one snapshot")
    results: list[SecondResult] = []
    prev: SecondResult | None = None
    for t, snapshot in enumerate(snapshots, start=1):
        try:
            prev = run_second(
                t,
                snapshot,
                prev,
                run_seed=run_seed,
                gamma=gamma,
                evo=evo,
                bounds=bounds,
                channel=channel,
                thresholds=thresholds,
            )
        except Exception as exc:
            raise RuntimeError(
                f"scenario failed at second {snapshot.second_index}: {exc}"
            ) from exc
        results.append(prev)
        logger.info(
            "second %d/%d: N=%d front=%d delay=%.4gs stability=%.3f",
            t,
            len(snapshots),
            prev.n_vehicles,
            len(prev.front),
            prev.metrics.avg_delay_s,
            prev.metrics.path_stability,
        )
    return results
