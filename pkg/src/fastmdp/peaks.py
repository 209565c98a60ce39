"""Per-step peak construction from goals, traffic and terrain.

Peaks are kept as dense ``(k, 6)`` float arrays with rows
``[reward_magnitude, discount, x, y, z, radius]`` so the valuation kernels
can consume them without conversion. The :class:`~fastmdp.domain.Peak`
objects are available through :class:`PeakSets` accessors for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import (
    AircraftState,
    IX,
    IVX,
    PEAK_SIZE,
    Peak,
    PeakKind,
    array_to_peaks,
    peaks_to_array,
    states_to_array,
)

GOAL_REWARD = 200.0
GOAL_DISCOUNT = 0.999

TRAFFIC_REWARD = 1000.0
TRAFFIC_DISCOUNT = 0.97
# Lookahead offsets in seconds along the traffic's current velocity.
TRAFFIC_OFFSETS = np.array([-5.0, 0.0, 5.0, 10.0, 15.0])
TRAFFIC_BASE_RADIUS = 300.0
TRAFFIC_RADIUS_GROWTH = 10.0
PEAKS_PER_AIRCRAFT = len(TRAFFIC_OFFSETS)

TERRAIN_REWARD = 1000.0
TERRAIN_DISCOUNT = 0.99

_EMPTY = np.empty((0, PEAK_SIZE), dtype=np.float64)
_EMPTY.setflags(write=False)


def build_goal_peak(goal: Sequence[float]) -> Peak:
    return Peak(GOAL_REWARD, GOAL_DISCOUNT, tuple(goal), np.inf, PeakKind.GOAL)


def terrain_peak(
    position: Sequence[float],
    radius: float,
    reward_magnitude: float = TERRAIN_REWARD,
    discount: float = TERRAIN_DISCOUNT,
) -> Peak:
    return Peak(reward_magnitude, discount, tuple(position), radius, PeakKind.TERRAIN)


def traffic_peak_rows(positions: np.ndarray, velocities: np.ndarray) -> np.ndarray:
    """Risk-well rows for many aircraft at once.

    Returns ``(5 * M, 6)``; rows ``5*j .. 5*j+4`` belong to aircraft ``j`` in
    lookahead-offset order.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    velocities = np.asarray(velocities, dtype=np.float64).reshape(-1, 3)
    m = positions.shape[0]
    if m == 0:
        return _EMPTY
    t = TRAFFIC_OFFSETS
    rows = np.empty((m, PEAKS_PER_AIRCRAFT, PEAK_SIZE), dtype=np.float64)
    rows[:, :, 0] = TRAFFIC_REWARD
    rows[:, :, 1] = TRAFFIC_DISCOUNT
    rows[:, :, 2:5] = positions[:, None, :] + velocities[:, None, :] * t[None, :, None]
    rows[:, :, 5] = TRAFFIC_BASE_RADIUS + TRAFFIC_RADIUS_GROWTH * t[None, :]
    return rows.reshape(-1, PEAK_SIZE)


def build_traffic_peaks(
    position: Sequence[float],
    velocity: Sequence[float],
    kind: PeakKind = PeakKind.INTRUDER,
) -> list[Peak]:
    """The five collision-avoidance wells placed along one aircraft's track."""
    return array_to_peaks(traffic_peak_rows(np.asarray(position), np.asarray(velocity)), kind)


@dataclass(frozen=True)
class PeakSets:
    """Peaks seen by one planning aircraft during one decision step."""

    positive: np.ndarray
    batch_negative: np.ndarray
    intruder_negative: np.ndarray
    terrain_negative: np.ndarray

    def peaks(self, which: str) -> list[Peak]:
        kinds = {
            "positive": PeakKind.GOAL,
            "batch_negative": PeakKind.BATCH_AIRCRAFT,
            "intruder_negative": PeakKind.INTRUDER,
            "terrain_negative": PeakKind.TERRAIN,
        }
        return array_to_peaks(getattr(self, which), kinds[which])

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (
            len(self.positive),
            len(self.batch_negative),
            len(self.intruder_negative),
            len(self.terrain_negative),
        )


def build_step_peaks(
    batch: np.ndarray | Sequence[AircraftState],
    goals: np.ndarray | Sequence[Sequence[float]],
    intruders: tuple[np.ndarray, np.ndarray] | Sequence | None,
    terrain: np.ndarray | Sequence[Peak],
) -> list[PeakSets]:
    """Build one :class:`PeakSets` per batch aircraft.

    ``batch`` is an ``(N, 12)`` state array, ``goals`` an ``(N, 3)`` array and
    ``intruders`` a ``(positions, velocities)`` pair of ``(M, 3)`` arrays.
    Intruder and terrain arrays are shared between all returned sets.
    """
    if not isinstance(batch, np.ndarray):
        batch = states_to_array(batch)
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    goals = np.asarray(goals, dtype=np.float64).reshape(-1, 3)
    n = batch.shape[0]
    if goals.shape[0] != n:
        raise ValueError(f"got {n} aircraft but {goals.shape[0]} goals")

    if intruders is None:
        intruder_rows = _EMPTY
    elif isinstance(intruders, tuple) and len(intruders) == 2 and isinstance(intruders[0], np.ndarray):
        intruder_rows = traffic_peak_rows(*intruders)
    else:
        # sequence of (position, velocity) pairs
        pairs = list(intruders)
        pos = np.array([p for p, _ in pairs], dtype=np.float64).reshape(-1, 3)
        vel = np.array([v for _, v in pairs], dtype=np.float64).reshape(-1, 3)
        intruder_rows = traffic_peak_rows(pos, vel)
    if isinstance(terrain, np.ndarray):
        terrain_rows = terrain.reshape(-1, PEAK_SIZE)
    else:
        terrain_rows = peaks_to_array(terrain)

    own = traffic_peak_rows(batch[:, IX : IX + 3], batch[:, IVX : IVX + 3])
    own = own.reshape(n, PEAKS_PER_AIRCRAFT, PEAK_SIZE)

    out = []
    for i in range(n):
        positive = np.array(
            [[GOAL_REWARD, GOAL_DISCOUNT, *goals[i], np.inf]], dtype=np.float64
        )
        others = np.delete(own, i, axis=0).reshape(-1, PEAK_SIZE)
        out.append(PeakSets(positive, others, intruder_rows, terrain_rows))
    return out
