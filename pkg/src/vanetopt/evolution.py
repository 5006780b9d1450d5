"""NSGA-II core for a single second.

Selection uses constraint domination (feasible beats infeasible, smaller
violation beats larger, Pareto dominance among feasible), normalized
crowding distances, binary tournaments, simulated binary crossover on the
continuous genes, uniform per-slot swap on relay genes, and a mutation
rate that adapts to the roster change between consecutive seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkEnvironment
from .encoding import (
    Bounds,
    GeneBlock,
    Genome,
    repair_relays,
    snap_to_grid,
)
from .objectives import ObjectiveVector, QosThresholds, evaluate


@dataclass
class Individual:
    """An evaluated genome with sorting annotations."""

    genome: Genome
    objectives: ObjectiveVector
    rank: int = -1
    crowding: float = 0.0
    provenance: str = "random"


@dataclass(frozen=True)
class EvoParams:
    """Genetic algorithm parameters for one second's optimization."""

    pop_size: int = 100
    max_generations: int = 20
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    eta_c: float = 15.0
    eta_m: float = 20.0
    tournament_size: int = 2

    def __post_init__(self) -> None:
        if self.pop_size < 4 or self.pop_size % 2 != 0:
            raise ValueError("pop_size must be even and >= 4")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.eta_c <= 0 or self.eta_m <= 0:
            raise ValueError("distribution indices must be positive")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")


def dominates(
    obj_a: np.ndarray, viol_a: float, obj_b: np.ndarray, viol_b: float
) -> bool:
    """Constraint-domination test for a pair of solutions."""
    a_feasible = viol_a == 0.0
    b_feasible = viol_b == 0.0
    if a_feasible and not b_feasible:
        return True
    if not a_feasible and b_feasible:
        return False
    if not a_feasible and not b_feasible:
        return viol_a < viol_b
    return bool(np.all(obj_a <= obj_b) and np.any(obj_a < obj_b))


def _domination_matrix(objectives: np.ndarray, violations: np.ndarray) -> np.ndarray:
    """dom[i, j] is True when solution i constraint-dominates solution j."""
    p = objectives.shape[0]
    all_le = np.ones((p, p), dtype=bool)
    any_lt = np.zeros((p, p), dtype=bool)
    for m in range(objectives.shape[1]):
        col = objectives[:, m]
        all_le &= col[:, None] <= col[None, :]
        any_lt |= col[:, None] < col[None, :]
    pareto = all_le & any_lt
    feasible = violations == 0.0
    fi = feasible[:, None]
    fj = feasible[None, :]
    less_violation = violations[:, None] < violations[None, :]
    return (fi & ~fj) | (fi & fj & pareto) | (~fi & ~fj & less_violation)


def non_dominated_sort(
    objectives: np.ndarray, violations: np.ndarray | None = None
) -> list[np.ndarray]:
    """Partition solutions into fronts under constraint domination.

    Args:
        objectives: (P, M) objective values, all minimized.
        violations: (P,) aggregate constraint violations; zeros when omitted.

    Returns:
        Index arrays, front 0 first; every index appears exactly once.
    """
    objectives = np.asarray(objectives, dtype=float)
    p = objectives.shape[0]
    if violations is None:
        violations = np.zeros(p)
    else:
        violations = np.asarray(violations, dtype=float)
    dom = _domination_matrix(objectives, violations)
    n_dominators = dom.sum(axis=0).astype(np.int64)
    fronts: list[np.ndarray] = []
    current = np.flatnonzero(n_dominators == 0)
    while current.size:
        fronts.append(current)
        n_dominators -= dom[current].sum(axis=0)
        n_dominators[current] = -1
        current = np.flatnonzero(n_dominators == 0)
    return fronts


def crowding_distance(front_objectives: np.ndarray) -> np.ndarray:
    """Normalized crowding distances within one front.

    Boundary solutions of every objective get infinity; interior ones
    accumulate the normalized gap between their neighbors per objective.
    Objectives that are constant across the front contribute nothing.
    """
    front_objectives = np.asarray(front_objectives, dtype=float)
    n = front_objectives.shape[0]
    if n <= 2:
        return np.full(n, np.inf)
    distances = np.zeros(n)
    for m in range(front_objectives.shape[1]):
        values = front_objectives[:, m]
        order = np.argsort(values, kind="stable")
        distances[order[0]] = np.inf
        distances[order[-1]] = np.inf
        span = values[order[-1]] - values[order[0]]
        if span > 0:
            distances[order[1:-1]] += (values[order[2:]] - values[order[:-2]]) / span
    return distances


def assign_fronts(population: list[Individual]) -> list[list[int]]:
    """Set rank and crowding on every individual; returns the fronts."""
    objectives = np.array([ind.objectives.as_tuple() for ind in population])
    violations = np.array([ind.objectives.violation for ind in population])
    fronts = non_dominated_sort(objectives, violations)
    result = []
    for rank, front in enumerate(fronts):
        dists = crowding_distance(objectives[front])
        for pos, idx in enumerate(front):
            population[idx].rank = rank
            population[idx].crowding = float(dists[pos])
        result.append([int(i) for i in front])
    return result


def sbx_beta(r: float, eta: float) -> float:
    """Spread factor of simulated binary crossover for coin value ``r``."""
    if r <= 0.5:
        return (2.0 * r) ** (1.0 / (eta + 1.0))
    return (1.0 / (2.0 * (1.0 - r))) ** (1.0 / (eta + 1.0))


def _sbx_values(
    y1: float, y2: float, lo: float, hi: float, eta: float, r: float
) -> tuple[float, float]:
    if r < 0.5:
        beta = sbx_beta(r, eta)
        spread = beta * abs(y2 - y1)
        c1 = 0.5 * ((y1 + y2) - spread)
        c2 = 0.5 * ((y1 + y2) + spread)
    else:
        c1, c2 = y1, y2
    return (min(max(c1, lo), hi), min(max(c2, lo), hi))


def sbx_pair(
    y1: float,
    y2: float,
    lo: float,
    hi: float,
    eta: float,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """SBX on one gene pair: blend when the coin falls below 0.5, else copy.

    Before clamping, the two children of the blend branch preserve the
    parents' sum.
    """
    return _sbx_values(y1, y2, lo, hi, eta, float(rng.random()))


def sbx_crossover(
    parent1: Genome,
    parent2: Genome,
    bounds: Bounds,
    eta_c: float,
    rng: np.random.Generator,
) -> tuple[Genome, Genome]:
    """Crossover two genomes sharing a roster.

    Continuous genes (block size, power) use SBX with a fresh coin per
    gene pair; relay slots, being categorical, use a uniform per-slot swap.

    Raises:
        ValueError: if the parents' rosters differ.
    """
    if parent1.roster != parent2.roster:
        raise ValueError("SBX parents must share a roster")
    n = len(parent1.blocks)
    hops = parent1.max_hops
    coins = rng.random(n * (2 + hops)).tolist()
    pos = 0
    blocks1 = []
    blocks2 = []
    for b1, b2 in zip(parent1.blocks, parent2.blocks):
        s1, s2 = _sbx_values(
            b1.s_b, b2.s_b, bounds.s_b_min, bounds.s_b_max, eta_c, coins[pos]
        )
        p1, p2 = _sbx_values(
            b1.p_n, b2.p_n, bounds.p_n_min, bounds.p_n_max, eta_c, coins[pos + 1]
        )
        pos += 2
        s1 = snap_to_grid(s1, bounds.s_b_grid)
        s2 = snap_to_grid(s2, bounds.s_b_grid)
        p1 = snap_to_grid(p1, bounds.p_n_grid)
        p2 = snap_to_grid(p2, bounds.p_n_grid)
        r1 = list(b1.relays)
        r2 = list(b2.relays)
        for h in range(hops):
            if coins[pos] < 0.5:
                r1[h], r2[h] = r2[h], r1[h]
            pos += 1
        blocks1.append(GeneBlock(s1, p1, tuple(r1)))
        blocks2.append(GeneBlock(s2, p2, tuple(r2)))
    return (
        Genome(parent1.roster, tuple(blocks1)),
        Genome(parent2.roster, tuple(blocks2)),
    )


def adaptive_mutation_rate(p_m: float, delta_n: int, n_t: int) -> float:
    """Mutation rate scaled by the relative roster change between seconds."""
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    return p_m * (1.0 + abs(delta_n) / n_t)


def polynomial_mutate(
    y: float, lo: float, hi: float, eta: float, rng: np.random.Generator
) -> float:
    """Bounded polynomial mutation of one continuous gene."""
    span = hi - lo
    u = float(rng.random())
    if u < 0.5:
        delta = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - (y - lo) / span) ** (eta + 1.0)) ** (
            1.0 / (eta + 1.0)
        ) - 1.0
    else:
        delta = 1.0 - (
            2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - (hi - y) / span) ** (eta + 1.0)
        ) ** (1.0 / (eta + 1.0))
    return min(max(y + delta * span, lo), hi)


def adaptive_mutation(
    genome: Genome,
    env: LinkEnvironment,
    bounds: Bounds,
    p_m: float,
    delta_n: int,
    n_t: int,
    eta_m: float,
    rng: np.random.Generator,
) -> Genome:
    """Mutate a genome at the adaptive per-gene rate.

    Continuous genes get polynomial mutation (clamped, grid-snapped when a
    grid is set); each relay slot resets with the same probability to a
    uniform draw from the vehicles within range of the previous hop.
    """
    rate = min(1.0, adaptive_mutation_rate(p_m, delta_n, n_t))
    geometry = env.geometry
    hops = genome.max_hops
    coins = rng.random(len(genome.blocks) * (2 + hops)).tolist()
    pos = 0
    blocks = []
    for i, block in enumerate(genome.blocks):
        s_b = block.s_b
        p_n = block.p_n
        if coins[pos] < rate:
            s_b = snap_to_grid(
                polynomial_mutate(s_b, bounds.s_b_min, bounds.s_b_max, eta_m, rng),
                bounds.s_b_grid,
            )
        if coins[pos + 1] < rate:
            p_n = snap_to_grid(
                polynomial_mutate(p_n, bounds.p_n_min, bounds.p_n_max, eta_m, rng),
                bounds.p_n_grid,
            )
        pos += 2
        relays = list(block.relays)
        prev = i
        for h in range(hops):
            if coins[pos] < rate:
                options = geometry.relay_options(prev, i)
                choice = int(options[int(rng.integers(0, len(options)))])
                relays[h] = int(geometry.ids[choice])
            pos += 1
            nxt = geometry.index.get(relays[h])
            prev = nxt if nxt is not None else i
        blocks.append(GeneBlock(s_b, p_n, tuple(relays)))
    return Genome(genome.roster, tuple(blocks))


def tournament_select(
    population: list[Individual], rng: np.random.Generator, k: int = 2
) -> int:
    """Index of the winner among k uniform draws.

    Lower rank wins; ties go to the larger crowding distance, then to the
    lower population index.
    """
    draws = rng.integers(0, len(population), size=k)
    best = int(draws[0])
    for raw in draws[1:]:
        idx = int(raw)
        a, b = population[idx], population[best]
        if (a.rank, -a.crowding, idx) < (b.rank, -b.crowding, best):
            best = idx
    return best


def environmental_select(
    union: list[Individual], pop_size: int
) -> list[Individual]:
    """Elitist (rank, crowding) truncation of a combined population."""
    objectives = np.array([ind.objectives.as_tuple() for ind in union])
    violations = np.array([ind.objectives.violation for ind in union])
    fronts = non_dominated_sort(objectives, violations)
    survivors: list[Individual] = []
    for front in fronts:
        dists = crowding_distance(objectives[front])
        order = sorted(range(len(front)), key=lambda p: (-dists[p], front[p]))
        need = pop_size - len(survivors)
        survivors.extend(union[front[p]] for p in order[:need])
        if len(survivors) == pop_size:
            break
    return survivors


def run_generation(
    population: list[Individual],
    env: LinkEnvironment,
    previous: Genome | None,
    params: EvoParams,
    bounds: Bounds,
    thresholds: QosThresholds,
    delta_n: int,
    rng: np.random.Generator,
) -> list[Individual]:
    """One NSGA-II generation: variation, evaluation, elitist truncation.

    The population must already carry ranks and crowding distances; the
    returned population of the same size does too.
    """
    pop_size = len(population)
    n_t = len(env)
    offspring: list[Individual] = []
    while len(offspring) < pop_size:
        g1 = population[tournament_select(population, rng, params.tournament_size)].genome
        g2 = population[tournament_select(population, rng, params.tournament_size)].genome
        if rng.random() < params.crossover_rate:
            c1, c2 = sbx_crossover(g1, g2, bounds, params.eta_c, rng)
        else:
            c1, c2 = g1, g2
        for child in (c1, c2):
            mutated = adaptive_mutation(
                child, env, bounds, params.mutation_rate, delta_n, n_t,
                params.eta_m, rng,
            )
            repaired = repair_relays(mutated, env.snapshot, bounds, env.geometry)
            offspring.append(
                Individual(
                    genome=repaired,
                    objectives=evaluate(repaired, env, previous, thresholds),
                    provenance="offspring",
                )
            )
    survivors = environmental_select(population + offspring[:pop_size], pop_size)
    assign_fronts(survivors)
    return survivors
