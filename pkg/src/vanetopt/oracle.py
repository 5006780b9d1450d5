"""Exhaustive ground truth for tiny instances.

Enumerates the full decision space of a small snapshot over discrete gene
grids, returning the exact non-dominated set under the same constraint
domination rule the optimizer uses.  Structured per objective: average
delay depends on (relays, block sizes) and link quality on (relays,
powers) independently, so each relay combination contributes at most one
feasible candidate point, found without visiting the full cross product.
A brute-force path through the production evaluator cross-checks the
structured one on very small instances.

Also provides an exact hypervolume for up to four objectives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import SPEED_OF_LIGHT, ChannelParams, LinkEnvironment, no_shadow
from .encoding import Bounds, GeneBlock, Genome
from .objectives import (
    EMPTY_PATH_VIOLATION,
    QosThresholds,
    eval_stability,
    evaluate,
)

MAX_JOINT_EVALUATIONS = 5_000_000


class InstanceTooLarge(ValueError):
    """The joint decision space exceeds the enumeration budget."""


@dataclass(frozen=True)
class TinyInstance:
    """A desk-scale instance: one snapshot plus discrete gene grids."""

    snapshot: object
    bounds: Bounds
    prev_genome: Genome | None = None

    def __post_init__(self) -> None:
        if self.bounds.s_b_grid is None or self.bounds.p_n_grid is None:
            raise ValueError("TinyInstance requires s_b and p_n grids")

    def joint_size(self) -> int:
        grid = len(self.bounds.s_b_grid) * len(self.bounds.p_n_grid)
        size = 1
        for chains in _chain_options(self):
            size *= grid * len(chains)
        return size


@dataclass
class OracleFront:
    """Exact front: objective vectors [f1,f2,f3,f4,violation] and genomes."""

    vectors: np.ndarray
    genomes: list[Genome]

    def __len__(self) -> int:
        return len(self.genomes)


def _check_size(instance: TinyInstance) -> None:
    size = instance.joint_size()
    if size > MAX_JOINT_EVALUATIONS:
        raise InstanceTooLarge(
            f"joint decision space has {size} combinations,"
            f" limit is {MAX_JOINT_EVALUATIONS}"
        )


def _valid_chains(geometry, source_index: int, hops: int) -> list[tuple[int, ...]]:
    """Every relay chain reachable under the slot-legality rule."""
    ids = geometry.ids
    chains: list[tuple[int, ...]] = []

    def extend(prefix: list[int], prev: int) -> None:
        if len(prefix) == hops:
            chains.append(tuple(prefix))
            return
        for j in geometry.relay_options(prev, source_index):
            j = int(j)
            extend(prefix + [int(ids[j])], j)

    extend([], source_index)
    return chains


def _chain_options(instance: TinyInstance) -> list[list[tuple[int, ...]]]:
    from .channel import RelayGeometry

    geometry = RelayGeometry(instance.snapshot, instance.bounds.d_max)
    return [
        _valid_chains(geometry, i, instance.bounds.max_hops)
        for i in range(len(instance.snapshot))
    ]


def _pareto_mask(vectors: np.ndarray) -> np.ndarray:
    """Boolean mask of vectors not dominated by any other (minimization)."""
    n = vectors.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = (vectors <= vectors[i]).all(axis=1)
        lt = (vectors < vectors[i]).any(axis=1)
        if np.any(le & lt & keep):
            keep[i] = False
    return keep


def _walk_relays(roster: tuple[int, ...], relays: tuple[tuple[int, ...], ...],
                 index: dict[int, int]) -> list[list[tuple[int, int]]]:
    paths = []
    for i, chain in enumerate(relays):
        prev = i
        hops: list[tuple[int, int]] = []
        for relay in chain:
            if relay == roster[i]:
                break
            nxt = index[relay]
            hops.append((prev, nxt))
            prev = nxt
        paths.append(hops)
    return paths


def enumerate_front(
    instance: TinyInstance,
    channel: ChannelParams,
    thresholds: QosThresholds,
    shadow_db=no_shadow,
) -> OracleFront:
    """Exact non-dominated set of the instance's full decision space.

    Walks every relay combination; within one combination the delay
    objective varies only with the block-size grid and link quality only
    with the power grid, so the best feasible point per combination is the
    pair of independent minima.  When no feasible point exists anywhere,
    the minimum-violation points are returned instead (they form front 0
    under constraint domination).

    Raises:
        InstanceTooLarge: the joint space exceeds the enumeration budget.
    """
    _check_size(instance)
    snapshot = instance.snapshot
    bounds = instance.bounds
    env = LinkEnvironment(snapshot, channel, bounds.d_max, shadow_db)
    roster = snapshot.ids
    n = len(roster)
    h = bounds.max_hops
    index = env.index
    dist = env.geometry.dist
    gain = env.gain
    noise = env.noise_w
    bandwidth = channel.bandwidth_hz

    s_grid = np.array(bounds.s_b_grid)
    p_grid = np.array(bounds.p_n_grid)
    s_combos = np.array(list(itertools.product(s_grid, repeat=n)))
    p_combos = np.array(list(itertools.product(p_grid, repeat=n)))
    p_watts = p_combos / 1000.0
    totals = p_watts @ gain

    chain_options = _chain_options(instance)
    d_max_delay = thresholds.delay_max_s
    p_th = thresholds.rx_power_min_w
    s_th = thresholds.sinr_min

    feasible_vectors: list[np.ndarray] = []
    feasible_genomes: list[Genome] = []
    fallback_vectors: list[np.ndarray] = []
    fallback_genomes: list[Genome] = []
    fallback_min = np.inf

    for relay_combo in itertools.product(*chain_options):
        paths = _walk_relays(roster, relay_combo, index)
        flows: dict[int, int] = {}
        for hops in paths:
            for tx in {u for u, _ in hops}:
                flows[tx] = flows.get(tx, 0) + 1

        # Per-vehicle delay coefficients: D_i = a_i * s_i + b_i.
        a = np.zeros(n)
        b = np.zeros(n)
        for i, hops in enumerate(paths):
            for u, v in hops:
                a[i] += max(1, flows.get(u, 1)) / bandwidth
                b[i] += dist[u, v] / SPEED_OF_LIGHT
        delays = s_combos * a + b
        f1 = delays.sum(axis=1) / n
        delay_viol = (
            np.maximum(0.0, (delays - d_max_delay) / d_max_delay).sum(axis=1)
        )

        counts = np.zeros(n)
        for chain in relay_combo:
            for relay in chain:
                counts[index[relay]] += 1
        f2 = float(np.var(counts / (n * h)))

        inv_sum = np.zeros(len(p_combos))
        link_viol = np.zeros(len(p_combos))
        seen_links: set[tuple[int, int]] = set()
        for hops in paths:
            for u, v in hops:
                prx = p_watts[:, u] * gain[u, v]
                sinr = prx / (totals[:, v] - prx + noise)
                inv_sum += 1.0 / sinr
                if (u, v) not in seen_links:
                    seen_links.add((u, v))
                    link_viol += np.maximum(0.0, (p_th - prx) / p_th)
                    link_viol += np.maximum(0.0, (s_th - sinr) / s_th)
        f3 = inv_sum / (n * h)

        if instance.prev_genome is not None:
            probe = Genome(
                roster,
                tuple(
                    GeneBlock(float(s_grid[0]), float(p_grid[0]), chain)
                    for chain in relay_combo
                ),
            )
            f4 = eval_stability(probe, instance.prev_genome)
        else:
            f4 = 0.0

        const_viol = 0.0
        if n >= 2:
            const_viol = EMPTY_PATH_VIOLATION * sum(1 for hops in paths if not hops)

        s_ok = np.flatnonzero(delay_viol == 0.0)
        p_ok = np.flatnonzero(link_viol == 0.0)
        if const_viol == 0.0 and s_ok.size and p_ok.size:
            si = s_ok[np.argmin(f1[s_ok])]
            pi = p_ok[np.argmin(f3[p_ok])]
            feasible_vectors.append(
                np.array([f1[si], f2, f3[pi], f4, 0.0])
            )
            feasible_genomes.append(
                _assemble(roster, s_combos[si], p_combos[pi], relay_combo)
            )
        elif not feasible_vectors:
            dv_min = delay_viol.min()
            lv_min = link_viol.min()
            combo_min = dv_min + lv_min + const_viol
            if combo_min < fallback_min:
                fallback_min = combo_min
                fallback_vectors.clear()
                fallback_genomes.clear()
            if combo_min == fallback_min:
                for si in np.flatnonzero(delay_viol == dv_min):
                    for pi in np.flatnonzero(link_viol == lv_min):
                        fallback_vectors.append(
                            np.array([f1[si], f2, f3[pi], f4, combo_min])
                        )
                        fallback_genomes.append(
                            _assemble(roster, s_combos[si], p_combos[pi], relay_combo)
                        )

    if feasible_vectors:
        stacked = np.vstack(feasible_vectors)
        keep = _pareto_mask(stacked[:, :4])
        idx = np.flatnonzero(keep)
        vectors, genomes = _dedupe(stacked[idx], [feasible_genomes[i] for i in idx])
        return OracleFront(vectors=vectors, genomes=genomes)
    stacked = np.vstack(fallback_vectors)
    vectors, genomes = _dedupe(stacked, fallback_genomes)
    return OracleFront(vectors=vectors, genomes=genomes)


def _assemble(roster, s_combo, p_combo, relay_combo) -> Genome:
    return Genome(
        roster,
        tuple(
            GeneBlock(float(s), float(p), tuple(chain))
            for s, p, chain in zip(s_combo, p_combo, relay_combo)
        ),
    )


def _dedupe(
    vectors: np.ndarray, genomes: list[Genome]
) -> tuple[np.ndarray, list[Genome]]:
    seen: dict[tuple, int] = {}
    keep: list[int] = []
    for i, row in enumerate(vectors):
        key = tuple(row)
        if key not in seen:
            seen[key] = i
            keep.append(i)
    return vectors[keep], [genomes[i] for i in keep]


def _iter_genomes(instance: TinyInstance):
    snapshot = instance.snapshot
    bounds = instance.bounds
    roster = snapshot.ids
    chain_options = _chain_options(instance)
    block_options = [
        [
            GeneBlock(float(s), float(p), chain)
            for s in bounds.s_b_grid
            for p in bounds.p_n_grid
            for chain in chains
        ]
        for chains in chain_options
    ]
    for blocks in itertools.product(*block_options):
        yield Genome(roster, blocks)


def enumerate_front_bruteforce(
    instance: TinyInstance,
    channel: ChannelParams,
    thresholds: QosThresholds,
    shadow_db=no_shadow,
) -> OracleFront:
    """Reference enumeration through the production evaluator.

    Evaluates every joint genome one by one; only practical for very small
    instances.  Used to cross-check the structured path.
    """
    _check_size(instance)
    env = LinkEnvironment(instance.snapshot, channel, instance.bounds.d_max, shadow_db)
    vectors = []
    genomes = []
    for genome in _iter_genomes(instance):
        obj = evaluate(genome, env, instance.prev_genome, thresholds)
        vectors.append([obj.f1, obj.f2, obj.f3, obj.f4, obj.violation])
        genomes.append(genome)
    stacked = np.array(vectors)
    feasible = np.flatnonzero(stacked[:, 4] == 0.0)
    if feasible.size:
        keep = feasible[_pareto_mask(stacked[feasible, :4])]
    else:
        keep = np.flatnonzero(stacked[:, 4] == stacked[:, 4].min())
    out_vectors, out_genomes = _dedupe(stacked[keep], [genomes[i] for i in keep])
    return OracleFront(vectors=out_vectors, genomes=out_genomes)


def hypervolume(points, reference_point) -> float:
    """Exact hypervolume dominated by ``points`` up to ``reference_point``.

    Minimization convention: the volume of the region between the points
    and the reference point.  Exact for up to four objectives via
    recursive slicing along the last objective.

    Raises:
        ValueError: if a point exceeds the reference point in any
            coordinate, or dimensions disagree.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference_point, dtype=float)
    if pts.shape[1] != ref.shape[0]:
        raise ValueError(
            f"points have {pts.shape[1]} objectives, reference has {ref.shape[0]}"
        )
    if np.any(pts > ref):
        raise ValueError("every point must dominate the reference point")
    return _hv(_prune(pts), ref)


def _prune(pts: np.ndarray) -> np.ndarray:
    if pts.shape[0] == 0:
        return pts
    pts = np.unique(pts, axis=0)
    return pts[_pareto_mask(pts)]


def _hv(pts: np.ndarray, ref: np.ndarray) -> float:
    if pts.shape[0] == 0:
        return 0.0
    d = pts.shape[1]
    if d == 1:
        return float(ref[0] - pts[:, 0].min())
    if d == 2:
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        xs = pts[order, 0]
        ys = pts[order, 1]
        volume = 0.0
        prev_y = ref[1]
        for x, y in zip(xs, ys):
            if y < prev_y:
                volume += (ref[0] - x) * (prev_y - y)
                prev_y = y
        return float(volume)
    volume = 0.0
    zs = np.unique(pts[:, -1])
    for k, z in enumerate(zs):
        upper = zs[k + 1] if k + 1 < len(zs) else ref[-1]
        thickness = upper - z
        if thickness <= 0.0:
            continue
        active = _prune(pts[pts[:, -1] <= z][:, :-1])
        volume += thickness * _hv(active, ref[:-1])
    return float(volume)


def count_dominated(
    candidates: np.ndarray,
    candidate_violations: np.ndarray,
    reference: np.ndarray,
    reference_violations: np.ndarray | None = None,
    rel_tol: float = 1e-9,
) -> int:
    """Candidates dominated by some reference point (constraint rule).

    A feasible reference point dominates any infeasible candidate; among
    infeasible solutions a smaller violation dominates; among feasible
    ones standard Pareto dominance applies.  Comparisons carry a relative
    tolerance so evaluation paths that differ only in float summation
    order do not produce spurious dominations.
    """
    candidates = np.atleast_2d(candidates)
    reference = np.atleast_2d(reference)
    if reference_violations is None:
        reference_violations = np.zeros(len(reference))
    ref_feasible = reference_violations <= 0.0
    count = 0
    for c, viol in zip(candidates, candidate_violations):
        if viol > 0.0:
            if np.any(ref_feasible):
                count += 1
                continue
            ref_viol = reference_violations
            eps_v = rel_tol * np.maximum(np.abs(ref_viol), abs(viol))
            if np.any(ref_viol < viol - eps_v):
                count += 1
            continue
        ref = reference[ref_feasible]
        if not len(ref):
            continue
        eps = rel_tol * np.maximum(np.abs(ref), np.abs(c))
        le_all = (ref <= c + eps).all(axis=1)
        lt_any = (ref < c - eps).any(axis=1)
        if np.any(le_all & lt_any):
            count += 1
    return count
