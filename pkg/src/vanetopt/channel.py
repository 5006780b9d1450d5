"""V2V radio propagation: path loss, shadowing, Doppler, noise, and SINR.

The scalar operations implement the propagation formulas directly.
:class:`LinkEnvironment` precomputes per-second link matrices (per-watt
gain between every directed vehicle pair) so that genome evaluation inside
the optimizer costs one matrix-vector product plus cheap lookups; it must
agree exactly with the scalar path and is tested against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .rng import derive_rng
from .trajectory import Snapshot

SPEED_OF_LIGHT = 2.998e8  # m/s, fixed so results are reproducible
BOLTZMANN = 1.380649e-23  # J/K

# Doppler attenuation exponent is capped so extreme relative speeds cannot
# underflow the factor to zero.
_DOPPLER_EXPONENT_CAP = 10.0


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants for the urban highway channel."""

    f_c: float = 5.9e9
    d0: float = 1.0
    path_loss_exponent: float = 2.5
    antenna_gain: float = 2.0
    system_loss: float = 1.0
    shadow_sigma_db: float = 4.0
    doppler_threshold_hz: float = 1000.0
    temperature_k: float = 290.0
    bandwidth_hz: float = 1.0e7
    d_min: float = 2.0

    def __post_init__(self) -> None:
        for name in (
            "f_c",
            "d0",
            "path_loss_exponent",
            "antenna_gain",
            "system_loss",
            "doppler_threshold_hz",
            "temperature_k",
            "bandwidth_hz",
            "d_min",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"ChannelParams.{name} must be positive")
        if self.shadow_sigma_db < 0:
            raise ValueError("ChannelParams.shadow_sigma_db must be >= 0")


def path_loss_db(d: float, params: ChannelParams) -> float:
    """Log-distance path loss in dB at distance ``d`` meters.

    Distances below ``params.d_min`` are clamped up to it to avoid the
    near-field singularity; non-positive distances are a domain error.
    """
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    d = max(d, params.d_min)
    ratio = d / params.d0
    return (
        20.0 * math.log10(ratio)
        + 10.0 * params.path_loss_exponent * math.log10(ratio)
        + 20.0 * math.log10(params.f_c / 1e9)
    )


def doppler_factor(v_rel: float, params: ChannelParams) -> float:
    """Doppler attenuation in (0, 1] for a relative speed in m/s."""
    shift = abs(v_rel) * params.f_c / SPEED_OF_LIGHT
    return math.exp(-min(shift / params.doppler_threshold_hz, _DOPPLER_EXPONENT_CAP))


def received_power(
    p_t_watts: float,
    d: float,
    v_rel: float,
    shadow_db: float,
    params: ChannelParams,
) -> float:
    """Received power in watts for one directed link.

    Combines the transmit power with linear path-loss attenuation, the
    shadow fading factor given in dB, antenna gain, Doppler attenuation
    and system loss.
    """
    if p_t_watts <= 0:
        raise ValueError(f"transmit power must be positive, got {p_t_watts}")
    attenuation = 10.0 ** (-path_loss_db(d, params) / 10.0)
    shadow = 10.0 ** (shadow_db / 10.0)
    return (
        p_t_watts
        * attenuation
        * shadow
        * params.antenna_gain
        * doppler_factor(v_rel, params)
        / params.system_loss
    )


def thermal_noise(params: ChannelParams) -> float:
    """Thermal noise power k_B * T * B in watts."""
    return BOLTZMANN * params.temperature_k * params.bandwidth_hz


def no_shadow(tx_id: int, rx_id: int) -> float:
    """Shadow sampler stub that disables shadowing."""
    return 0.0


class ShadowField:
    """Shadow fading in dB, drawn once per directed link per second.

    Each value derives from (run seed, second, tx id, rx id), so the same
    link always sees the same draw within a second no matter how many
    times or in which order it is evaluated.
    """

    def __init__(self, run_seed: int, second: int, sigma_db: float):
        if sigma_db < 0:
            raise ValueError("sigma_db must be >= 0")
        self.run_seed = run_seed
        self.second = second
        self.sigma_db = sigma_db
        self._cache: dict[tuple[int, int], float] = {}

    def __call__(self, tx_id: int, rx_id: int) -> float:
        if self.sigma_db == 0.0:
            return 0.0
        key = (tx_id, rx_id)
        value = self._cache.get(key)
        if value is None:
            rng = derive_rng(self.run_seed, "shadow", self.second, tx_id, rx_id)
            value = float(rng.normal(0.0, self.sigma_db))
            self._cache[key] = value
        return value


def sinr(
    tx_id: int,
    rx_id: int,
    snapshot: Snapshot,
    powers: Mapping[int, float],
    params: ChannelParams,
    shadow_db: Callable[[int, int], float] = no_shadow,
) -> float:
    """SINR of the directed link tx -> rx under full concurrent interference.

    Every other vehicle in the snapshot interferes at the receiver with its
    own transmit power from ``powers`` (watts).  The denominator adds
    thermal noise.

    Raises:
        ValueError: if tx == rx or either id is absent from the snapshot.
    """
    if tx_id == rx_id:
        raise ValueError(f"tx and rx must differ, both are {tx_id}")
    tx = snapshot.find(tx_id)
    rx = snapshot.find(rx_id)
    if tx is None or rx is None:
        raise ValueError(f"link ({tx_id}, {rx_id}) not in snapshot roster")

    def link_power(a, b) -> float:
        d = math.hypot(a.x - b.x, a.y - b.y)
        v_rel = math.hypot(a.vx - b.vx, a.vy - b.vy)
        return received_power(powers[a.id], d, v_rel, shadow_db(a.id, b.id), params)

    signal = link_power(tx, rx)
    interference = sum(
        link_power(v, rx) for v in snapshot.vehicles if v.id not in (tx_id, rx_id)
    )
    return signal / (interference + thermal_noise(params))


class RelayGeometry:
    """Distance matrix and neighbor orderings for relay feasibility checks."""

    def __init__(self, snapshot: Snapshot, d_max: float):
        self.snapshot = snapshot
        self.d_max = d_max
        self.ids = np.array(snapshot.ids, dtype=np.int64)
        self.index = {int(v): i for i, v in enumerate(self.ids)}
        xy = np.array([[v.x, v.y] for v in snapshot.vehicles])
        diff = xy[:, None, :] - xy[None, :, :]
        self.dist = np.hypot(diff[..., 0], diff[..., 1])
        n = len(self.ids)
        self._in_range: list[np.ndarray] = []
        self._by_distance: list[np.ndarray] = []
        self._options_cache: dict[tuple[int, int], np.ndarray] = {}
        for i in range(n):
            within = np.flatnonzero(self.dist[i] <= d_max)
            self._in_range.append(within)
            # Tie-break equal distances by lower id (== lower index).
            order = np.lexsort((np.arange(n), self.dist[i]))
            self._by_distance.append(order[self.dist[i][order] <= d_max])

    def __len__(self) -> int:
        return len(self.ids)

    def relay_options(self, node_index: int, source_index: int) -> np.ndarray:
        """Legal relay values for a slot whose previous hop is ``node_index``.

        Real relays must lie within ``d_max`` of the previous hop and be a
        different vehicle (no self-hops); the source id is always included
        as the path-termination marker.  The result is in roster order and
        never empty.
        """
        if node_index == source_index:
            return self._in_range[node_index]
        key = (node_index, source_index)
        cached = self._options_cache.get(key)
        if cached is None:
            within = self._in_range[node_index]
            cached = within[within != node_index]
            if not np.any(cached == source_index):
                cached = np.sort(np.append(cached, source_index))
            self._options_cache[key] = cached
        return cached

    def repair_candidates(self, node_index: int, source_index: int) -> int | None:
        """Nearest in-range vehicle usable as a repaired relay, or None.

        Excludes the previous-hop node itself and the path's source (a slot
        equal to the source is the path-termination marker, never a repair
        target).  Ties in distance resolve to the lower id.
        """
        for j in self._by_distance[node_index]:
            j = int(j)
            if j != node_index and j != source_index:
                return j
        return None


class LinkEnvironment:
    """Per-second precomputed link state shared by all genome evaluations.

    ``gain[k, j]`` is the received power at j per transmit watt at k,
    including path loss, shadow fading, antenna gain, Doppler attenuation
    and system loss; the diagonal is zero so a vehicle never contributes
    interference to its own reception.
    """

    def __init__(
        self,
        snapshot: Snapshot,
        params: ChannelParams,
        d_max: float,
        shadow_db: Callable[[int, int], float] = no_shadow,
    ):
        self.snapshot = snapshot
        self.params = params
        self.geometry = RelayGeometry(snapshot, d_max)
        self.ids = self.geometry.ids
        self.index = self.geometry.index
        self.noise_w = thermal_noise(params)
        vel = np.array([[v.vx, v.vy] for v in snapshot.vehicles])
        dv = vel[:, None, :] - vel[None, :, :]
        self.v_rel = np.hypot(dv[..., 0], dv[..., 1])
        n = len(self.ids)
        dist = np.maximum(self.geometry.dist, params.d_min)
        ratio = dist / params.d0
        pl_db = (20.0 + 10.0 * params.path_loss_exponent) * np.log10(ratio) + (
            20.0 * math.log10(params.f_c / 1e9)
        )
        dopp = np.exp(
            -np.minimum(
                (self.v_rel * params.f_c / SPEED_OF_LIGHT) / params.doppler_threshold_hz,
                _DOPPLER_EXPONENT_CAP,
            )
        )
        shadow = np.zeros((n, n))
        for i, tx in enumerate(self.ids):
            for j, rx in enumerate(self.ids):
                if i != j:
                    shadow[i, j] = shadow_db(int(tx), int(rx))
        self.gain = (
            10.0 ** (-pl_db / 10.0)
            * 10.0 ** (shadow / 10.0)
            * params.antenna_gain
            * dopp
            / params.system_loss
        )
        np.fill_diagonal(self.gain, 0.0)
        # Plain-list mirrors: scalar lookups in the evaluation inner loop
        # are several times faster on lists than on numpy arrays.
        self.gain_rows: list[list[float]] = self.gain.tolist()
        self.dist_rows: list[list[float]] = self.geometry.dist.tolist()

    def __len__(self) -> int:
        return len(self.ids)

    def total_rx(self, p_watts: np.ndarray) -> np.ndarray:
        """Total received power per vehicle when everyone transmits."""
        return p_watts @ self.gain

    def link_sinr(self, tx: int, rx: int, p_watts: np.ndarray, total: np.ndarray) -> float:
        """SINR of link tx -> rx (roster indices) given all transmit powers."""
        signal = p_watts[tx] * self.gain[tx, rx]
        return signal / (total[rx] - signal + self.noise_w)
