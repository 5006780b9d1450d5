import numpy as np
import pytest

from vanetopt.channel import ChannelParams, LinkEnvironment, no_shadow
from vanetopt.encoding import Bounds
from vanetopt.objectives import QosThresholds
from vanetopt.trajectory import Snapshot, VehicleState


def make_snapshot(rows, second=1, frame=1):
    """rows: iterable of (id, x, y, vx, vy)."""
    vehicles = tuple(
        VehicleState(id=r[0], x=r[1], y=r[2], vx=r[3], vy=r[4])
        for r in sorted(rows, key=lambda r: r[0])
    )
    return Snapshot(second_index=second, frame_index=frame, vehicles=vehicles)


def random_snapshot(rng, n, span=400.0, second=1):
    ids = sorted(rng.choice(np.arange(1, 10 * n), size=n, replace=False).tolist())
    return make_snapshot(
        [
            (
                int(i),
                float(rng.uniform(0, span)),
                float(rng.uniform(0, 16)),
                float(rng.uniform(22, 33)),
                0.0,
            )
            for i in ids
        ],
        second=second,
    )


@pytest.fixture
def channel_params():
    return ChannelParams()


@pytest.fixture
def bounds():
    return Bounds()


@pytest.fixture
def thresholds():
    return QosThresholds()


def make_env(snapshot, params=None, d_max=300.0, shadow=no_shadow):
    return LinkEnvironment(snapshot, params or ChannelParams(), d_max, shadow)
