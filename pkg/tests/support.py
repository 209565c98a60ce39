"""Shared fixtures-in-code for the test suite: instance generators and oracles."""

from __future__ import annotations

import math

import numpy as np

from fastmdp.domain import ActionSet, AircraftLimits, AircraftState, Scenario
from fastmdp.peaks import terrain_peak
from fastmdp.planstore import FlightPlan
from fastmdp.scheduler import PlanRequest

# Reduced action grid used wherever many full flights are flown.
FAST_COUNTS = (7, 4, 5)


def fast_scenario(**kw) -> Scenario:
    kw.setdefault("action_counts", FAST_COUNTS)
    return Scenario(**kw)


def random_instance(rng: np.random.Generator):
    """A small valuation instance: N <= 3 aircraft, A <= 50 actions, <= 30 peaks, W = 10."""
    limits = AircraftLimits()
    while True:
        counts = tuple(int(c) for c in rng.integers(1, 6, size=3))
        if counts[0] * counts[1] * counts[2] <= 50:
            break
    actions = ActionSet.uniform(limits, counts)
    n = int(rng.integers(1, 4))
    states = [
        AircraftState(
            tuple(rng.uniform([-300, -300, 60], [300, 300, 400])),
            heading=float(rng.uniform(-math.pi, math.pi)),
            speed=float(rng.uniform(limits.speed_min, limits.speed_max)),
            vertical_rate=float(rng.uniform(-5, 5)),
            clock=float(rng.uniform(0, 100)),
        )
        for _ in range(n)
    ]
    goals = rng.uniform([-2000, -2000, 100], [2000, 2000, 500], size=(n, 3))
    # Peak budget per aircraft: 1 goal + 5 per other batch member + 5 per intruder + terrain.
    budget = 30 - 1 - 5 * (n - 1)
    m = int(rng.integers(0, budget // 5 + 1))
    budget -= 5 * m
    k = int(rng.integers(0, min(budget, 4) + 1))
    intruders = (
        rng.uniform([-400, -400, 50], [400, 400, 450], size=(m, 3)),
        rng.uniform(-25, 25, size=(m, 3)),
    )
    terrain = [
        terrain_peak(tuple(rng.uniform([-400, -400, 0], [400, 400, 300])), float(rng.uniform(50, 500)))
        for _ in range(k)
    ]
    return limits, actions, states, goals, intruders, terrain


def brute_min_separation(a: FlightPlan, b: FlightPlan) -> float:
    """Closest approach at clocks both plans sample, by exhaustive pairing.

    Plans on a shared ``dt`` grid are compared sample-to-sample; off-grid
    clocks use hand-rolled linear interpolation of ``b``.
    """
    best = math.inf
    tb = [float(r[0]) for r in b.rows]
    for ra in a.rows:
        t = float(ra[0])
        if t < tb[0] - 1e-9 or t > tb[-1] + 1e-9:
            continue
        j = 0
        while j + 1 < len(tb) and tb[j + 1] <= t + 1e-9:
            j += 1
        if j + 1 < len(tb) and abs(tb[j] - t) > 1e-9:
            w = (t - tb[j]) / (tb[j + 1] - tb[j])
            q = [b.rows[j][c] + w * (b.rows[j + 1][c] - b.rows[j][c]) for c in (1, 2, 3)]
        else:
            q = [b.rows[j][c] for c in (1, 2, 3)]
        best = min(best, math.dist([ra[1], ra[2], ra[3]], q))
    return best


def fcfs_workload(seed: int, count: int = 100) -> list[PlanRequest]:
    """Seeded requests crossing a shared 2 km x 2 km volume over five minutes."""
    rng = np.random.default_rng(seed)
    reqs = []
    while len(reqs) < count:
        s = rng.uniform([0, 0, 250], [2000, 2000, 350])
        d = rng.uniform([0, 0, 250], [2000, 2000, 350])
        if not 800.0 <= float(np.linalg.norm(s - d)) <= 1500.0:
            continue
        reqs.append(PlanRequest(f"R{len(reqs):03d}", tuple(s), tuple(d), round(float(rng.uniform(0, 300)), 1)))
    return reqs


def workload_scenario() -> Scenario:
    return fast_scenario(
        terrain_peaks=(
            terrain_peak((600.0, 1400.0, 150.0), 250.0),
            terrain_peak((1400.0, 600.0, 150.0), 250.0),
        )
    )
