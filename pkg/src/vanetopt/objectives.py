"""Objective evaluation: delay, load balance, link quality, stability.

All four objectives are minimized.  A vehicle's communication path is its
relay chain walked hop by hop; the walk stops at the first slot equal to
the vehicle's own id (the termination marker), so trailing marker slots
express shorter logical paths.  A path terminated at the first slot while
peers exist means the vehicle does not communicate at all, which is scored
as a constraint violation rather than rewarded with zero-cost objectives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SPEED_OF_LIGHT, LinkEnvironment
from .encoding import Genome

# An absent or unreachable first hop is treated as a link received at zero
# power and zero SINR: both normalized shortfalls sit at their cap of 1.
EMPTY_PATH_VIOLATION = 2.0


@dataclass(frozen=True)
class QosThresholds:
    """Feasibility thresholds in core units (watts, linear ratio, seconds)."""

    rx_power_min_w: float = 1e-12
    sinr_min: float = 10.0
    delay_max_s: float = 0.1

    def __post_init__(self) -> None:
        for name in ("rx_power_min_w", "sinr_min", "delay_max_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"QosThresholds.{name} must be positive")


@dataclass(frozen=True)
class ObjectiveVector:
    """Objectives (all minimized) plus aggregate constraint violation."""

    f1: float
    f2: float
    f3: float
    f4: float
    violation: float

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.f1, self.f2, self.f3, self.f4)

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3, self.f4])


def walk_paths(genome: Genome, env: LinkEnvironment) -> list[list[tuple[int, int]]]:
    """Active hops of every vehicle's path, as (tx, rx) roster indices.

    The walk stops at the first relay slot equal to the source id; slots
    after the termination marker are ignored.
    """
    index = env.index
    paths = []
    for i, block in enumerate(genome.blocks):
        source_id = genome.roster[i]
        prev = i
        hops: list[tuple[int, int]] = []
        for relay in block.relays:
            if relay == source_id:
                break
            nxt = index[relay]
            hops.append((prev, nxt))
            prev = nxt
        paths.append(hops)
    return paths


def _transmit_flow_counts(paths: list[list[tuple[int, int]]]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for hops in paths:
        for tx in {u for u, _ in hops}:
            counts[tx] = counts.get(tx, 0) + 1
    return counts


def _delay(
    genome: Genome, env: LinkEnvironment, paths: list[list[tuple[int, int]]]
) -> tuple[float, dict[int, float]]:
    flows = _transmit_flow_counts(paths)
    bandwidth = env.params.bandwidth_hz
    dist = env.dist_rows
    delays: dict[int, float] = {}
    for i, hops in enumerate(paths):
        total = 0.0
        s_b = genome.blocks[i].s_b
        for u, v in hops:
            # Rate at 1 bit/s/Hz; the network bandwidth is split evenly
            # between the flows transmitting from the same node.
            rate = bandwidth / max(1, flows.get(u, 1))
            total += s_b / rate + dist[u][v] / SPEED_OF_LIGHT
        delays[genome.roster[i]] = total
    f1 = sum(delays.values()) / len(genome.roster)
    return f1, delays


def eval_delay(genome: Genome, env: LinkEnvironment) -> tuple[float, dict[int, float]]:
    """Average end-to-end delay and the per-vehicle delays in seconds.

    Each hop costs transmission time (block size over the allocated rate)
    plus propagation time (hop distance over the speed of light).
    Vehicles with no active hops have zero delay.
    """
    return _delay(genome, env, walk_paths(genome, env))


def eval_load(genome: Genome) -> float:
    """Population variance of the normalized relay loads.

    Vehicle i's load is the number of relay slots selecting i across the
    whole genome (all N*H slots count, including termination markers),
    normalized by N*H.
    """
    n = len(genome.roster)
    h = genome.max_hops
    counts = dict.fromkeys(genome.roster, 0)
    for block in genome.blocks:
        for relay in block.relays:
            counts[relay] += 1
    scale = n * h
    loads = [counts[vid] / scale for vid in genome.roster]
    mean = sum(loads) / n
    return sum((x - mean) ** 2 for x in loads) / n


def _link_quality(
    genome: Genome, env: LinkEnvironment, paths: list[list[tuple[int, int]]]
) -> tuple[float, dict[tuple[int, int], float], dict[tuple[int, int], float]]:
    p_arr = np.fromiter(
        (b.p_n for b in genome.blocks), dtype=float, count=len(genome.blocks)
    )
    p_arr /= 1000.0
    total = (p_arr @ env.gain).tolist()
    p_w = p_arr.tolist()
    gain = env.gain_rows
    noise = env.noise_w
    inv_sum = 0.0
    sinr_by_link: dict[tuple[int, int], float] = {}
    prx_by_link: dict[tuple[int, int], float] = {}
    ids = genome.roster
    for hops in paths:
        for u, v in hops:
            signal = p_w[u] * gain[u][v]
            s = signal / (total[v] - signal + noise)
            inv_sum += 1.0 / s
            key = (ids[u], ids[v])
            sinr_by_link[key] = s
            prx_by_link[key] = signal
    f3 = inv_sum / (len(ids) * genome.max_hops)
    return f3, sinr_by_link, prx_by_link


def eval_link_quality(
    genome: Genome, env: LinkEnvironment
) -> tuple[float, dict[tuple[int, int], float], dict[tuple[int, int], float]]:
    """Mean inverse SINR over all path slots, plus per-link SINR/power maps.

    Inactive slots contribute zero to the sum while the N*H denominator is
    unchanged.  The maps are keyed by (tx id, rx id) over active hops.
    """
    return _link_quality(genome, env, walk_paths(genome, env))


def mean_inverse_sinr(sinr_values: list[float], n: int, h: int) -> float:
    """Aggregate helper: sum of reciprocals normalized by N*H."""
    return sum(1.0 / s for s in sinr_values) / (n * h)


def eval_stability(current: Genome, previous: Genome | None) -> float:
    """Temporal instability of the relay selection in [0, 1].

    Without a predecessor the score is 0.  With identical rosters it is
    the fraction of relay slots that changed.  Otherwise it is the mean of
    the changed-slot fraction over vehicles present in both rosters
    (matched by id) and the roster-size change penalty
    ``|N(t) - N(t-1)| / max(N(t), N(t-1))``.
    """
    if previous is None:
        return 0.0
    h = min(current.max_hops, previous.max_hops)
    prev_by_id = dict(zip(previous.roster, previous.blocks))
    if current.roster == previous.roster:
        changed = sum(
            a != b
            for vid, block in zip(current.roster, current.blocks)
            for a, b in zip(block.relays[:h], prev_by_id[vid].relays[:h])
        )
        return changed / (len(current.roster) * h)
    common = [vid for vid in current.roster if vid in prev_by_id]
    if common:
        cur_by_id = dict(zip(current.roster, current.blocks))
        changed = sum(
            a != b
            for vid in common
            for a, b in zip(cur_by_id[vid].relays[:h], prev_by_id[vid].relays[:h])
        )
        path_term = changed / (len(common) * h)
    else:
        # No common vehicle to compare; only the dimensional term applies.
        path_term = 0.0
    n_now = len(current.roster)
    n_prev = len(previous.roster)
    dim_term = abs(n_now - n_prev) / max(n_now, n_prev)
    return 0.5 * (path_term + dim_term)


def _constraints(
    genome: Genome,
    thresholds: QosThresholds,
    paths: list[list[tuple[int, int]]],
    sinr_by_link: dict[tuple[int, int], float],
    prx_by_link: dict[tuple[int, int], float],
    delays: dict[int, float],
) -> float:
    violation = 0.0
    for (_, _), prx in prx_by_link.items():
        violation += max(
            0.0, (thresholds.rx_power_min_w - prx) / thresholds.rx_power_min_w
        )
    for (_, _), s in sinr_by_link.items():
        violation += max(0.0, (thresholds.sinr_min - s) / thresholds.sinr_min)
    for d in delays.values():
        violation += max(0.0, (d - thresholds.delay_max_s) / thresholds.delay_max_s)
    if len(genome.roster) >= 2:
        empty = sum(1 for hops in paths if not hops)
        violation += EMPTY_PATH_VIOLATION * empty
    return violation


def eval_constraints(
    genome: Genome,
    thresholds: QosThresholds,
    sinr_by_link: dict[tuple[int, int], float],
    prx_by_link: dict[tuple[int, int], float],
    delays: dict[int, float],
    env: LinkEnvironment,
) -> float:
    """Aggregate normalized constraint violation (0 iff feasible).

    Sums the normalized shortfall below the received-power and SINR
    thresholds over the distinct active links, the normalized excess over
    the delay bound per vehicle, and the empty-path penalty for vehicles
    that do not communicate while peers exist.  The path-length bound
    holds by construction (fixed relay vector length).
    """
    return _constraints(
        genome, thresholds, walk_paths(genome, env), sinr_by_link, prx_by_link, delays
    )


def evaluate(
    genome: Genome,
    env: LinkEnvironment,
    previous: Genome | None,
    thresholds: QosThresholds,
) -> ObjectiveVector:
    """Full objective vector of a genome against one snapshot.

    Deterministic given the environment (which fixes the second's shadow
    realization), the genome and the previous representative genome.
    """
    paths = walk_paths(genome, env)
    f1, delays = _delay(genome, env, paths)
    f2 = eval_load(genome)
    f3, sinr_by_link, prx_by_link = _link_quality(genome, env, paths)
    f4 = eval_stability(genome, previous)
    violation = _constraints(
        genome, thresholds, paths, sinr_by_link, prx_by_link, delays
    )
    return ObjectiveVector(f1=f1, f2=f2, f3=f3, f4=f4, violation=violation)
