"""Genome representation for per-vehicle decision blocks.

Each vehicle owns one :class:`GeneBlock`: a data block size, a transmit
power and a fixed-length relay vector.  Relay genes are vehicle ids (not
positions) so blocks survive roster reordering across seconds; a relay
equal to the block's own vehicle id is the path-termination marker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .channel import RelayGeometry
from .trajectory import Snapshot


@dataclass(frozen=True)
class Bounds:
    """Gene ranges and structural limits of the decision space.

    ``s_b`` is in bits, ``p_n`` in milliwatts.  When a grid is set, the
    corresponding gene is restricted to the grid values (used to make the
    search space finite so runs are comparable with the exhaustive
    reference evaluator).
    """

    s_b_min: float = 1e5
    s_b_max: float = 1e7
    p_n_min: float = 1e3
    p_n_max: float = 1e5
    max_hops: int = 3
    d_max: float = 300.0
    s_b_grid: tuple[float, ...] | None = None
    p_n_grid: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.s_b_min < self.s_b_max:
            raise ValueError("require s_b_min < s_b_max")
        if not self.p_n_min < self.p_n_max:
            raise ValueError("require p_n_min < p_n_max")
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        for name, lo, hi in (
            ("s_b_grid", self.s_b_min, self.s_b_max),
            ("p_n_grid", self.p_n_min, self.p_n_max),
        ):
            grid = getattr(self, name)
            if grid is not None:
                if not grid:
                    raise ValueError(f"{name} must not be empty")
                if any(v < lo or v > hi for v in grid):
                    raise ValueError(f"{name} values must lie within bounds")
                if list(grid) != sorted(grid):
                    raise ValueError(f"{name} must be sorted ascending")


@dataclass(frozen=True)
class GeneBlock:
    """Decision variables of one vehicle: block size, power, relay chain."""

    s_b: float
    p_n: float
    relays: tuple[int, ...]


@dataclass(frozen=True)
class Genome:
    """Concatenated gene blocks over the current vehicle roster."""

    roster: tuple[int, ...]
    blocks: tuple[GeneBlock, ...]

    def __post_init__(self) -> None:
        if len(self.roster) != len(self.blocks):
            raise ValueError("one gene block per roster vehicle required")

    @property
    def max_hops(self) -> int:
        return len(self.blocks[0].relays)

    def dimension(self) -> int:
        """Total scalar dimension: (2 + H) per vehicle."""
        return (2 + self.max_hops) * len(self.roster)

    def block_of(self, vehicle_id: int) -> GeneBlock:
        return self.blocks[self.roster.index(vehicle_id)]


def snap_to_grid(value: float, grid: tuple[float, ...] | None) -> float:
    """Nearest grid value (lower value on ties); identity without a grid."""
    if grid is None:
        return value
    best = grid[0]
    best_gap = abs(value - best)
    for g in grid[1:]:
        gap = abs(value - g)
        if gap < best_gap:
            best, best_gap = g, gap
    return best


def _draw_continuous(
    lo: float, hi: float, grid: tuple[float, ...] | None, rng: np.random.Generator
) -> float:
    if grid is not None:
        return float(grid[int(rng.integers(0, len(grid)))])
    return float(rng.uniform(lo, hi))


def _random_block(
    source_index: int,
    geometry: RelayGeometry,
    bounds: Bounds,
    rng: np.random.Generator,
) -> GeneBlock:
    s_b = _draw_continuous(bounds.s_b_min, bounds.s_b_max, bounds.s_b_grid, rng)
    p_n = _draw_continuous(bounds.p_n_min, bounds.p_n_max, bounds.p_n_grid, rng)
    relays = []
    prev = source_index
    for _ in range(bounds.max_hops):
        options = geometry.relay_options(prev, source_index)
        choice = int(options[int(rng.integers(0, len(options)))])
        relays.append(int(geometry.ids[choice]))
        prev = choice
    return GeneBlock(s_b=s_b, p_n=p_n, relays=tuple(relays))


def random_genome(
    snapshot: Snapshot,
    bounds: Bounds,
    rng: np.random.Generator,
    geometry: RelayGeometry | None = None,
) -> Genome:
    """Uniform random genome for a snapshot.

    Continuous genes are uniform within bounds (or uniform over the grid
    when one is set).  Each relay slot is drawn uniformly from the vehicles
    within ``d_max`` of the previous hop node (hop 0 is the source), which
    always includes at least that node itself.
    """
    if geometry is None:
        geometry = RelayGeometry(snapshot, bounds.d_max)
    blocks = tuple(
        _random_block(i, geometry, bounds, rng) for i in range(len(snapshot))
    )
    return Genome(roster=snapshot.ids, blocks=blocks)


def repair_relays(
    genome: Genome,
    snapshot: Snapshot,
    bounds: Bounds,
    geometry: RelayGeometry | None = None,
) -> Genome:
    """Replace relay genes that are stale or out of range.

    A slot pointing at a vehicle that left the roster, at a vehicle
    farther than ``d_max`` from the previous hop, or at the previous hop
    itself (a meaningless self-hop) is replaced by the nearest in-range
    roster vehicle (ties to the lower id; the previous hop and the source
    are excluded as replacement targets).  If no such vehicle exists the
    slot becomes the source's own id, the termination marker.  Slots
    already equal to the source id are markers and stay untouched.
    Idempotent.
    """
    if geometry is None:
        geometry = RelayGeometry(snapshot, bounds.d_max)
    index = geometry.index
    changed = False
    blocks = []
    for i, block in enumerate(genome.blocks):
        source_id = genome.roster[i]
        prev = i
        relays = list(block.relays)
        for h, relay in enumerate(relays):
            if relay == source_id:
                prev = i
                continue
            j = index.get(relay)
            if j is not None and j != prev and geometry.dist[prev, j] <= geometry.d_max:
                prev = j
                continue
            replacement = geometry.repair_candidates(prev, i)
            if replacement is None:
                relays[h] = source_id
                prev = i
            else:
                relays[h] = int(geometry.ids[replacement])
                prev = replacement
            changed = True
        blocks.append(
            block if relays == list(block.relays) else
            GeneBlock(block.s_b, block.p_n, tuple(relays))
        )
    if not changed:
        return genome
    return Genome(roster=genome.roster, blocks=tuple(blocks))


def adapt_dimension(
    old: Genome,
    new_snapshot: Snapshot,
    bounds: Bounds,
    rng: np.random.Generator,
    geometry: RelayGeometry | None = None,
) -> Genome:
    """Carry a genome across a roster change.

    Blocks of vehicles present in both rosters are copied (keyed by id),
    departed vehicles' blocks are dropped, and new vehicles receive fresh
    random blocks.  Relay genes referencing departed vehicles are then
    repaired.
    """
    if geometry is None:
        geometry = RelayGeometry(new_snapshot, bounds.d_max)
    old_by_id = dict(zip(old.roster, old.blocks))
    blocks = []
    for i, vehicle_id in enumerate(new_snapshot.ids):
        block = old_by_id.get(vehicle_id)
        if block is None:
            block = _random_block(i, geometry, bounds, rng)
        blocks.append(block)
    genome = Genome(roster=new_snapshot.ids, blocks=tuple(blocks))
    return repair_relays(genome, new_snapshot, bounds, geometry)


def validate_genome(genome: Genome, snapshot: Snapshot, bounds: Bounds) -> None:
    """Raise ValueError unless the genome is structurally valid."""
    if genome.roster != snapshot.ids:
        raise ValueError("genome roster does not match snapshot roster")
    roster = set(genome.roster)
    for vehicle_id, block in zip(genome.roster, genome.blocks):
        if not bounds.s_b_min <= block.s_b <= bounds.s_b_max:
            raise ValueError(f"vehicle {vehicle_id}: s_b {block.s_b} out of bounds")
        if not bounds.p_n_min <= block.p_n <= bounds.p_n_max:
            raise ValueError(f"vehicle {vehicle_id}: p_n {block.p_n} out of bounds")
        if len(block.relays) != bounds.max_hops:
            raise ValueError(
                f"vehicle {vehicle_id}: expected {bounds.max_hops} relay slots,"
                f" got {len(block.relays)}"
            )
        for relay in block.relays:
            if relay not in roster:
                raise ValueError(
                    f"vehicle {vehicle_id}: relay {relay} not in roster"
                )
    if genome.dimension() != (2 + bounds.max_hops) * len(genome.roster):
        raise ValueError("genome dimension mismatch")


def genome_to_dict(genome: Genome) -> dict:
    return {
        "roster": list(genome.roster),
        "blocks": [
            {"s_b": b.s_b, "p_n": b.p_n, "relays": list(b.relays)}
            for b in genome.blocks
        ],
    }


def genome_from_dict(data: dict) -> Genome:
    return Genome(
        roster=tuple(int(v) for v in data["roster"]),
        blocks=tuple(
            GeneBlock(
                s_b=float(b["s_b"]),
                p_n=float(b["p_n"]),
                relays=tuple(int(r) for r in b["relays"]),
            )
            for b in data["blocks"]
        ),
    )


def genome_to_json(genome: Genome) -> str:
    """Serialize for checkpointing; round-trips exactly."""
    return json.dumps(genome_to_dict(genome), sort_keys=True)


def genome_from_json(text: str) -> Genome:
    return genome_from_dict(json.loads(text))


def genomes_equal(a: Genome, b: Genome) -> bool:
    return a.roster == b.roster and a.blocks == b.blocks


def roster_union(genomes: Iterable[Genome]) -> set[int]:
    out: set[int] = set()
    for g in genomes:
        out.update(g.roster)
    return out
