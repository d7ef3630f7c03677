from __future__ import annotations

import logging
import math

import numpy as np

from .generators import propagator
from .qubit import NORM_TOLERANCE, check_physical
from .types import BlochGenerator, BlochVector, TrajectoryRecord

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("t", "r1", "r2", "r3", "norm")
# Remainders below this fraction of dt count as rounding of t_max / dt.
GRID_SLACK = 1e-9


def default_dt(g: BlochGenerator) -> float:
    """64 samples per effective period."""
    return g.params.to_dimensionless().period / 64.0


def propagate(g: BlochGenerator, r0: BlochVector, t: float) -> BlochVector:
    check_physical(r0)
    state = propagator(g, t) @ r0.as_array()
    state[0] = 1.0
    return BlochVector.from_array(state)


def trajectory(g: BlochGenerator, r0: BlochVector, t_max: float, dt: float) -> TrajectoryRecord:
    """Samples at multiples of dt, closed by one shorter step when t_max is not on the grid."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0 (got {dt})")
    if t_max < dt:
        raise ValueError(f"t_max must be >= dt (got t_max={t_max}, dt={dt})")
    check_physical(r0)
    steps = int(math.floor(t_max / dt + GRID_SLACK))
    step = propagator(g, dt)
    times = [dt * k for k in range(steps + 1)]
    states = [r0]
    current = r0.as_array()
    for _ in range(steps):
        current = step @ current
        current[0] = 1.0
        states.append(BlochVector.from_array(current))
    remainder = t_max - steps * dt
    if remainder > GRID_SLACK * dt:
        current = propagator(g, remainder) @ current
        current[0] = 1.0
        states.append(BlochVector.from_array(current))
        times.append(t_max)
    logger.debug("trajectory kind=%s samples=%d t_max=%.6g", g.kind.value, len(states), times[-1])
    return TrajectoryRecord(times=np.array(times), states=states, generator_kind=g.kind, params=g.params)


def purity_monitor(rec: TrajectoryRecord) -> list[tuple[float, float]]:
    """Samples whose polarization norm exceeds 1, i.e. the state stopped being positive."""
    events = [
        (float(t), state.norm)
        for t, state in zip(rec.times, rec.states)
        if state.norm > 1.0 + NORM_TOLERANCE
    ]
    if events:
        logger.info(
            "positivity lost kind=%s events=%d max_norm=%.12f",
            rec.generator_kind.value,
            len(events),
            max(norm for _, norm in events),
        )
    return events


def trajectory_rows(rec: TrajectoryRecord) -> list[tuple[float, ...]]:
    return [(float(t), *state.r[1:], state.norm) for t, state in zip(rec.times, rec.states)]
