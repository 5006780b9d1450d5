"""Highway scene snapshots from trajectory files or a synthetic generator.

A recording is reduced to one :class:`Snapshot` per whole second, using the
middle frame of the second as the representative state.  Input files follow
the highD column convention (``frame,id,x,y,xVelocity,yVelocity``); the
synthetic generator emits the same schema so generated scenes round-trip
through the CSV path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .rng import derive_rng

REQUIRED_COLUMNS = ("frame", "id", "x", "y", "xVelocity", "yVelocity")

ARCHETYPES = ("increasing", "fluctuating", "decreasing")

LANE_WIDTH_M = 4.0
SPEED_RANGE_MS = (22.0, 33.0)

# Vehicle-count target curves per archetype.  The increasing curve climbs
# from ~10 vehicles to ~24 over 40 s, the decreasing curve mirrors it, and
# the fluctuating curve swings between ~15 and ~25 with a 16 s period.
_RAMP_START = 10.0
_RAMP_END = 24.0
_RAMP_SLOPE = 0.35
_FLUCT_MID = 20.0
_FLUCT_AMPLITUDE = 5.0
_FLUCT_PERIOD_S = 16.0

# Poisson arrival/departure noise is accumulated into a random walk clamped
# to this band, so archetype shapes survive any noise realization.
_NOISE_BAND = 2


class TrajectorySchemaError(ValueError):
    """The trajectory file does not match the expected column schema."""


class EmptySecondError(ValueError):
    """A covered second has no vehicle rows at its middle frame."""


@dataclass(frozen=True)
class VehicleState:
    """Position and velocity of one vehicle at one frame."""

    id: int
    x: float
    y: float
    vx: float
    vy: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "vx", "vy"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"vehicle {self.id}: {name} must be finite")

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class Snapshot:
    """Vehicles present at the representative frame of one second."""

    second_index: int
    frame_index: int
    vehicles: tuple[VehicleState, ...]

    def __post_init__(self) -> None:
        if self.second_index < 1:
            raise ValueError(f"second_index must be >= 1, got {self.second_index}")
        if not self.vehicles:
            raise ValueError(f"second {self.second_index}: snapshot has no vehicles")
        ids = [v.id for v in self.vehicles]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise ValueError(
                f"second {self.second_index}: vehicles must be strictly sorted by id"
            )

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vehicles)

    def __len__(self) -> int:
        return len(self.vehicles)

    def find(self, vehicle_id: int) -> VehicleState | None:
        """Binary search by id; rosters are sorted so this is O(log n)."""
        lo, hi = 0, len(self.vehicles)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.vehicles[mid].id < vehicle_id:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.vehicles) and self.vehicles[lo].id == vehicle_id:
            return self.vehicles[lo]
        return None


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a synthetic highway scene."""

    archetype: str
    duration_s: int
    road_length_m: float = 480.0
    lane_count: int = 4
    arrival_rate: float = 0.4
    departure_rate: float = 0.4
    rng_seed: int = 0
    frame_rate: int = 25

    def __post_init__(self) -> None:
        if self.archetype not in ARCHETYPES:
            raise ValueError(
                f"unknown archetype {self.archetype!r}; valid: {', '.join(ARCHETYPES)}"
            )
        if self.duration_s < 2:
            raise ValueError(f"duration_s must be >= 2, got {self.duration_s}")
        if self.road_length_m <= 0:
            raise ValueError("road_length_m must be positive")
        if self.lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if self.arrival_rate < 0 or self.departure_rate < 0:
            raise ValueError("arrival/departure rates must be >= 0")
        if self.frame_rate < 1:
            raise ValueError("frame_rate must be >= 1")


def distance(a: VehicleState, b: VehicleState) -> float:
    """Planar Euclidean distance between two vehicles in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def middle_frame(second: int, frame_rate: int) -> int:
    """1-based index of the representative (median) frame of a second.

    Second ``s`` covers frames ``(s-1)*fps + 1 .. s*fps``; the median of
    that range is returned (lower median for even frame rates).  At 25 fps
    the representative frame of second 1 is frame 13.
    """
    if second < 1:
        raise ValueError(f"second must be >= 1, got {second}")
    return (second - 1) * frame_rate + (frame_rate + 1) // 2


def load_trajectory(path: str | Path, frame_rate: int = 25) -> list[Snapshot]:
    """Load a highD-formatted CSV and return one Snapshot per whole second.

    Args:
        path: CSV file with at least the columns
            ``frame,id,x,y,xVelocity,yVelocity``; extra columns are ignored.
            Frames are 1-based.
        frame_rate: recording frame rate in frames per second.

    Returns:
        Snapshots for every second wholly covered by the file's frame span,
        each built from the vehicles present at the second's middle frame.

    Raises:
        TrajectorySchemaError: a required column is missing.
        EmptySecondError: a covered second has no rows at its middle frame.
        ValueError: malformed rows, 0-based frames, or no whole second.
    """
    if frame_rate < 1:
        raise ValueError(f"frame_rate must be >= 1, got {frame_rate}")
    by_frame: dict[int, list[VehicleState]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise TrajectorySchemaError(
                f"{path}: missing required column(s): {', '.join(missing)}"
            )
        for row_num, row in enumerate(reader, start=2):
            try:
                frame = int(row["frame"])
                state = VehicleState(
                    id=int(row["id"]),
                    x=float(row["x"]),
                    y=float(row["y"]),
                    vx=float(row["xVelocity"]),
                    vy=float(row["yVelocity"]),
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad row {row_num}: {exc}") from exc
            by_frame.setdefault(frame, []).append(state)
    if not by_frame:
        raise ValueError(f"{path}: file contains no trajectory rows")
    min_frame = min(by_frame)
    max_frame = max(by_frame)
    if min_frame < 1:
        raise ValueError(f"{path}: frames must be 1-based, found frame {min_frame}")
    first_second = (min_frame - 1 + frame_rate - 1) // frame_rate + 1
    last_second = max_frame // frame_rate
    if last_second < first_second:
        raise ValueError(
            f"{path}: no whole second covered (frames {min_frame}..{max_frame})"
        )
    snapshots = []
    for second in range(first_second, last_second + 1):
        frame = middle_frame(second, frame_rate)
        states = by_frame.get(frame)
        if not states:
            raise EmptySecondError(
                f"{path}: second {second} has no vehicles at frame {frame}"
            )
        snapshots.append(
            Snapshot(
                second_index=second,
                frame_index=frame,
                vehicles=tuple(sorted(states, key=lambda v: v.id)),
            )
        )
    return snapshots


def _target_count(archetype: str, second: int) -> float:
    t = second - 1
    if archetype == "increasing":
        return _RAMP_START + _RAMP_SLOPE * t
    if archetype == "decreasing":
        return _RAMP_END - _RAMP_SLOPE * t
    return _FLUCT_MID + _FLUCT_AMPLITUDE * math.cos(2.0 * math.pi * t / _FLUCT_PERIOD_S)


class _SceneState:
    """Mutable roster used while simulating frames."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.rng = derive_rng(spec.rng_seed, "scenario")
        self.next_id = 1
        self.roster: list[VehicleState] = []

    def _spawn(self, x: float) -> None:
        lane = int(self.rng.integers(0, self.spec.lane_count))
        speed = float(self.rng.uniform(*SPEED_RANGE_MS))
        self.roster.append(
            VehicleState(
                id=self.next_id,
                x=x % self.spec.road_length_m,
                y=(lane + 0.5) * LANE_WIDTH_M,
                vx=speed,
                vy=0.0,
            )
        )
        self.next_id += 1

    def seed_initial(self, count: int) -> None:
        for _ in range(count):
            self._spawn(float(self.rng.uniform(0.0, self.spec.road_length_m)))

    def adjust(self, desired: int) -> None:
        diff = desired - len(self.roster)
        if diff > 0:
            # New arrivals enter near the road start, staggered.
            for j in range(diff):
                self._spawn(float(self.rng.uniform(0.0, 4.0)) + 7.0 * j)
        elif diff < 0:
            # Vehicles closest to the end of the segment exit the scene.
            leaving = sorted(self.roster, key=lambda v: (-v.x, v.id))[: -diff]
            gone = {v.id for v in leaving}
            self.roster = [v for v in self.roster if v.id not in gone]

    def advance(self) -> None:
        dt = 1.0 / self.spec.frame_rate
        length = self.spec.road_length_m
        self.roster = [
            VehicleState(v.id, (v.x + v.vx * dt) % length, v.y, v.vx, v.vy)
            for v in self.roster
        ]


def synthesize_frames(spec: ScenarioSpec) -> list[list[VehicleState]]:
    """Simulate a scene frame by frame; returns per-frame vehicle lists.

    Kinematics are constant-speed lane following on a wrapping road
    segment, so the roster changes only through explicit arrival and
    departure events applied at second boundaries.  Each second's roster
    tracks the archetype's target-count curve; Poisson noise driven by the
    arrival/departure rates perturbs the count within a clamped band, so
    the archetype shape is preserved for every seed, and zero rates leave
    the roster untouched.
    """
    scene = _SceneState(spec)
    scene.seed_initial(max(1, round(_target_count(spec.archetype, 1))))
    walk = 0
    frames: list[list[VehicleState]] = []
    for second in range(1, spec.duration_s + 1):
        if second >= 2:
            walk += int(scene.rng.poisson(spec.arrival_rate))
            walk -= int(scene.rng.poisson(spec.departure_rate))
            walk = max(-_NOISE_BAND, min(_NOISE_BAND, walk))
            desired = max(1, round(_target_count(spec.archetype, second)) + walk)
            scene.adjust(desired)
        for _ in range(spec.frame_rate):
            frames.append(sorted(scene.roster, key=lambda v: v.id))
            scene.advance()
    return frames


def synthesize_scenario(spec: ScenarioSpec) -> list[Snapshot]:
    """Generate one Snapshot per second of a synthetic scene."""
    frames = synthesize_frames(spec)
    return snapshots_from_frames(frames, spec.frame_rate)


def snapshots_from_frames(
    frames: list[list[VehicleState]], frame_rate: int
) -> list[Snapshot]:
    """Reduce 1-based frame-level data to per-second middle-frame snapshots."""
    seconds = len(frames) // frame_rate
    out = []
    for second in range(1, seconds + 1):
        frame = middle_frame(second, frame_rate)
        out.append(
            Snapshot(
                second_index=second,
                frame_index=frame,
                vehicles=tuple(frames[frame - 1]),
            )
        )
    return out


def write_trajectory_csv(
    path: str | Path, frames: Iterable[Iterable[VehicleState]]
) -> None:
    """Write frame-level vehicle states as a highD-schema CSV.

    Floats are written with repr precision so loading the file reproduces
    the exact same snapshots.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REQUIRED_COLUMNS)
        for frame_no, states in enumerate(frames, start=1):
            for v in states:
                writer.writerow(
                    [frame_no, v.id, repr(v.x), repr(v.y), repr(v.vx), repr(v.vy)]
                )
