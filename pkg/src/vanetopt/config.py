"""Run configuration: file loading, validation, unit normalization.

Config files are TOML (or JSON with the same structure).  Threshold fields
are written in the units people quote them in (dB, ms) and converted to
the core's linear/SI units at this boundary.  The natural-unit values stay
the stored source of truth so parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import ChannelParams
from .encoding import Bounds
from .evolution import EvoParams
from .objectives import QosThresholds
from .trajectory import ScenarioSpec


class ConfigError(ValueError):
    """A configuration file is structurally or semantically invalid."""


@dataclass(frozen=True)
class ThresholdSpec:
    """QoS thresholds in natural units."""

    rx_power_min_w: float = 1e-12
    min_sinr_db: float = 10.0
    max_delay_ms: float = 100.0

    def to_qos(self) -> QosThresholds:
        return QosThresholds(
            rx_power_min_w=self.rx_power_min_w,
            sinr_min=10.0 ** (self.min_sinr_db / 10.0),
            delay_max_s=self.max_delay_ms / 1000.0,
        )


@dataclass(frozen=True)
class OracleSpec:
    """Tiny-instance description for the exhaustive reference evaluator."""

    vehicles: tuple[tuple[float, ...], ...]
    s_b_grid: tuple[float, ...]
    p_n_grid: tuple[float, ...]
    max_hops: int = 1
    second: int = 1


@dataclass(frozen=True)
class RunConfig:
    seed: int
    channel: ChannelParams = field(default_factory=ChannelParams)
    bounds: Bounds = field(default_factory=Bounds)
    evo: EvoParams = field(default_factory=EvoParams)
    thresholds: ThresholdSpec = field(default_factory=ThresholdSpec)
    gammas: tuple[float, ...] = (0.3,)
    w_c: float = 0.3
    scenario: ScenarioSpec | None = None
    trajectory_path: str | None = None
    frame_rate: int = 25
    output_dir: str = "out"

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ConfigError("run.seed must be a non-negative integer")
        if not self.gammas:
            raise ConfigError("run.gamma must list at least one value")
        for g in self.gammas:
            if not 0.0 <= g <= 1.0:
                raise ConfigError(f"run.gamma values must be in [0, 1], got {g}")
        if not 0.0 <= self.w_c <= 1.0:
            raise ConfigError(f"run.w_c must be in [0, 1], got {self.w_c}")
        if (self.scenario is None) == (self.trajectory_path is None):
            raise ConfigError(
                "exactly one of [scenario] and [trajectory] must be configured"
            )


_SECTION_BUILDERS = {
    "channel": ChannelParams,
    "bounds": Bounds,
    "evo": EvoParams,
    "thresholds": ThresholdSpec,
    "scenario": ScenarioSpec,
}


def _build_section(name: str, data: dict):
    builder = _SECTION_BUILDERS[name]
    try:
        if name == "bounds":
            for grid in ("s_b_grid", "p_n_grid"):
                if grid in data and data[grid] is not None:
                    data[grid] = tuple(data[grid])
        return builder(**data)
    except TypeError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def config_from_dict(raw: dict) -> RunConfig:
    """Build and validate a RunConfig from parsed file contents."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    known = {"run", "channel", "bounds", "evo", "thresholds", "scenario",
             "trajectory", "oracle"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")

    run = dict(raw.get("run", {}))
    if "seed" not in run:
        raise ConfigError("[run]: seed is required (no wall-clock seeding)")
    gammas = run.pop("gamma", 0.3)
    if isinstance(gammas, (int, float)):
        gammas = (float(gammas),)
    else:
        gammas = tuple(float(g) for g in gammas)

    sections = {}
    for name in ("channel", "bounds", "evo", "thresholds"):
        sections[name] = _build_section(name, dict(raw.get(name, {})))

    scenario = None
    trajectory_path = None
    frame_rate = 25
    if "scenario" in raw:
        scenario = _build_section("scenario", dict(raw["scenario"]))
        frame_rate = scenario.frame_rate
    if "trajectory" in raw:
        traj = dict(raw["trajectory"])
        if "path" not in traj:
            raise ConfigError("[trajectory]: path is required")
        trajectory_path = str(traj.pop("path"))
        frame_rate = int(traj.pop("frame_rate", 25))
        if traj:
            raise ConfigError(
                f"[trajectory]: unknown key(s): {', '.join(sorted(traj))}"
            )

    seed = int(run.pop("seed"))
    w_c = float(run.pop("w_c", 0.3))
    output_dir = str(run.pop("output_dir", "out"))
    if run:
        raise ConfigError(f"[run]: unknown key(s): {', '.join(sorted(run))}")
    return RunConfig(
        seed=seed,
        gammas=gammas,
        w_c=w_c,
        output_dir=output_dir,
        channel=sections["channel"],
        bounds=sections["bounds"],
        evo=sections["evo"],
        thresholds=sections["thresholds"],
        scenario=scenario,
        trajectory_path=trajectory_path,
        frame_rate=frame_rate,
    )


def oracle_from_dict(raw: dict) -> OracleSpec:
    if "oracle" not in raw:
        raise ConfigError("[oracle] section is required for the oracle command")
    data = dict(raw["oracle"])
    try:
        return OracleSpec(
            vehicles=tuple(tuple(float(x) for x in v) for v in data["vehicles"]),
            s_b_grid=tuple(float(x) for x in data["s_b_grid"]),
            p_n_grid=tuple(float(x) for x in data["p_n_grid"]),
            max_hops=int(data.get("max_hops", 1)),
            second=int(data.get("second", 1)),
        )
    except KeyError as exc:
        raise ConfigError(f"[oracle]: missing key {exc}") from exc


def load_raw(path: str | Path) -> dict:
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            with open(path) as fh:
                return json.load(fh)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    return config_from_dict(load_raw(path))


def config_to_dict(cfg: RunConfig) -> dict:
    """Serializable form with the same structure the file parser accepts."""
    out: dict = {
        "run": {
            "seed": cfg.seed,
            "gamma": list(cfg.gammas),
            "w_c": cfg.w_c,
            "output_dir": cfg.output_dir,
        },
        "channel": asdict(cfg.channel),
        "bounds": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in asdict(cfg.bounds).items()
            if v is not None
        },
        "evo": asdict(cfg.evo),
        "thresholds": asdict(cfg.thresholds),
    }
    if cfg.scenario is not None:
        out["scenario"] = asdict(cfg.scenario)
    if cfg.trajectory_path is not None:
        out["trajectory"] = {
            "path": cfg.trajectory_path,
            "frame_rate": cfg.frame_rate,
        }
    return out


def config_to_json(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)
