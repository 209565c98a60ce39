"""Step-rate benchmarks against synthetic accepted-plan traffic.

Synthetic plans are straight, constant-speed flights between two random
points of a box, all airborne for the whole measurement window, so every
plan contributes its full set of traffic wells at every step. Benchmarks only
ever read from private snapshots and never touch a persistent store.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .domain import ICLOCK, AircraftState, Scenario, states_to_array
from .peaks import PEAKS_PER_AIRCRAFT
from .planstore import FlightPlan, PlanSnapshot
from .simulation import decision_step

BENCH_HEADER = ("param", "steps", "wall_seconds", "hz", "total_cycles_hz")
DEFAULT_VOLUME = ((0.0, 0.0, 200.0), (2000.0, 2000.0, 400.0))


@dataclass(frozen=True)
class BenchRecord:
    param: int
    steps: int
    wall_seconds: float
    hz: float
    total_cycles_hz: float

    @classmethod
    def from_timing(cls, param: int, steps: int, wall_seconds: float, batch_size: int = 1) -> "BenchRecord":
        if not wall_seconds > 0:
            raise ValueError("wall_seconds must be positive")
        hz = steps / wall_seconds
        return cls(int(param), int(steps), float(wall_seconds), hz, batch_size * hz)

    @property
    def seconds_per_step(self) -> float:
        return self.wall_seconds / self.steps


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    res = stats.linregress(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return LinearFit(float(res.slope), float(res.intercept), float(res.rvalue) ** 2)


def synthesize_plans(
    n: int,
    seed: int,
    duration: float,
    dt: float = 0.1,
    volume: tuple[Sequence[float], Sequence[float]] = DEFAULT_VOLUME,
    t0: float = 0.0,
) -> list[FlightPlan]:
    """``n`` straight flights with random endpoints, each spanning ``[t0, t0 + duration]``."""
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(volume[0], dtype=np.float64), np.asarray(volume[1], dtype=np.float64)
    samples = int(math.ceil(duration / dt)) + 1
    clocks = t0 + dt * np.arange(samples)
    frac = (clocks - t0) / (clocks[-1] - t0) if samples > 1 else np.zeros(1)
    plans = []
    for i in range(n):
        a, b = rng.uniform(lo, hi), rng.uniform(lo, hi)
        pos = a + frac[:, None] * (b - a)
        span = max(clocks[-1] - t0, dt)
        vel = (b - a) / span
        rows = np.column_stack(
            [
                clocks,
                pos,
                np.full(samples, math.atan2(vel[1], vel[0])),
                np.full(samples, math.hypot(vel[0], vel[1])),
                np.full(samples, vel[2]),
            ]
        )
        plans.append(FlightPlan(f"S{i:06d}", f"SYN{i:06d}", t0, dt, rows, b))
    return plans


def _random_states(
    rng: np.random.Generator, b: int, scenario: Scenario, volume
) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = np.asarray(volume[0], dtype=np.float64), np.asarray(volume[1], dtype=np.float64)
    starts = rng.uniform(lo, hi, size=(b, 3))
    goals = rng.uniform(lo, hi, size=(b, 3))
    states = [
        AircraftState(tuple(s), heading=math.atan2(g[1] - s[1], g[0] - s[0]), speed=scenario.cruise_speed)
        for s, g in zip(starts, goals)
    ]
    return states_to_array(states), goals


def time_decision_steps(
    states: np.ndarray,
    goals: np.ndarray,
    snapshot: PlanSnapshot,
    scenario: Scenario,
    steps: int,
    warmup: int = 50,
    workers: int = 1,
    prune: bool = True,
) -> float:
    """Wall seconds spent on ``steps`` decision steps after ``warmup`` untimed ones."""
    commands = scenario.actions.as_array()
    states = states.copy()
    wall = 0.0
    for k in range(warmup + steps):
        begin = time.perf_counter()
        pos, vel, _ = snapshot.sample(k * scenario.dt)
        states, _ = decision_step(states, goals, (pos, vel), scenario, commands, workers, prune)
        states[:, ICLOCK] = (k + 1) * scenario.dt
        if k >= warmup:
            wall += time.perf_counter() - begin
    return wall


def bench_plan_scaling(
    plan_counts: Sequence[int],
    scenario: Scenario,
    seed: int = 0,
    steps: int = 100,
    warmup: int = 50,
    workers: int = 1,
    prune: bool = True,
    volume=DEFAULT_VOLUME,
) -> list[BenchRecord]:
    """Single-aircraft step rate as the number of accepted plans grows."""
    duration = (warmup + steps + 1) * scenario.dt
    rng = np.random.default_rng(seed)
    states, goals = _random_states(rng, 1, scenario, volume)
    records = []
    for n in plan_counts:
        snap = PlanSnapshot(synthesize_plans(n, seed, duration, scenario.dt, volume))
        wall = time_decision_steps(states, goals, snap, scenario, steps, warmup, workers, prune)
        records.append(BenchRecord.from_timing(n, steps, wall))
    return records


def bench_batch_scaling(
    batch_sizes: Sequence[int],
    scenario: Scenario,
    intruders: int = 100,
    seed: int = 0,
    steps: int = 100,
    warmup: int = 50,
    workers: int = 1,
    prune: bool = True,
    volume=DEFAULT_VOLUME,
) -> list[BenchRecord]:
    """Per-batch step rate and total aircraft-steps per second versus batch size."""
    duration = (warmup + steps + 1) * scenario.dt
    snap = PlanSnapshot(synthesize_plans(intruders, seed, duration, scenario.dt, volume))
    records = []
    for b in batch_sizes:
        rng = np.random.default_rng(seed + 1)
        states, goals = _random_states(rng, b, scenario, volume)
        wall = time_decision_steps(states, goals, snap, scenario, steps, warmup, workers, prune)
        records.append(BenchRecord.from_timing(b, steps, wall, batch_size=b))
    return records


def peak_counts(plan_counts: Sequence[int]) -> list[int]:
    """Intruder well count seen per step when every plan is airborne."""
    return [PEAKS_PER_AIRCRAFT * n for n in plan_counts]


def write_bench_csv(records: Sequence[BenchRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(BENCH_HEADER)
        for r in records:
            out.writerow([r.param, r.steps, repr(r.wall_seconds), repr(r.hz), repr(r.total_cycles_hz)])
