"""Synchronous decision loop for a batch of co-simulated aircraft."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import (
    ICLOCK,
    IX,
    IZ,
    AircraftState,
    Scenario,
    states_to_array,
    validate_scenario,
)
from .dynamics import forward_project
from .peaks import build_step_peaks
from .planstore import FlightPlan, PlanSnapshot, PlanStore, plan_rows
from .valuation import ValuationGrid, evaluate

log = logging.getLogger(__name__)

TRAJECTORY_HEADER = ("time", "aircraft_id", "x", "y", "z", "heading", "speed", "vertical_rate")


class Status(str, Enum):
    REACHED_GOAL = "reached_goal"
    COLLISION_AIRCRAFT = "collision_aircraft"
    COLLISION_TERRAIN = "collision_terrain"
    TIMEOUT = "timeout"


@dataclass
class TerminalReport:
    statuses: list[Status | None]
    nmac: np.ndarray
    min_separation: float


@dataclass
class SimOutcome:
    statuses: list[Status]
    trajectories: list[FlightPlan]
    nmac: list[bool]
    min_separation_observed: float
    step_count: int
    separation_history: list[float] = field(default_factory=list)


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.empty((a.shape[0], b.shape[0]))
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def check_terminal(
    positions: np.ndarray,
    goals: np.ndarray,
    intruder_positions: np.ndarray,
    terrain: np.ndarray,
    scenario: Scenario,
    active: np.ndarray | None = None,
) -> TerminalReport:
    """Classify each active aircraft after a state update.

    Collisions take precedence over goal capture. An NMAC (separation below
    ``scenario.separation_threshold``) is flagged but is not terminal.
    Inactive aircraft get ``None`` and take no part in separation checks.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    goals = np.asarray(goals, dtype=np.float64).reshape(-1, 3)
    n = positions.shape[0]
    active = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    intruder_positions = np.asarray(intruder_positions, dtype=np.float64).reshape(-1, 3)
    statuses: list[Status | None] = [None] * n
    nmac = np.zeros(n, dtype=bool)
    idx = np.nonzero(active)[0]
    if idx.size == 0:
        return TerminalReport(statuses, nmac, math.inf)

    p = positions[idx]
    own = _pairwise(p, p)
    np.fill_diagonal(own, np.inf)
    other = _pairwise(p, intruder_positions)
    nearest = np.full(idx.size, np.inf)
    if idx.size > 1:
        nearest = own.min(axis=1)
    if other.shape[1]:
        nearest = np.minimum(nearest, other.min(axis=1))

    if terrain.shape[0]:
        core = scenario.terrain_core_ratio * terrain[:, 5]
        in_core = (_pairwise(p, terrain[:, 2:5]) < core[None, :]).any(axis=1)
    else:
        in_core = np.zeros(idx.size, dtype=bool)
    below = p[:, 2] < 0.0
    to_goal = np.linalg.norm(p - goals[idx], axis=1)

    for j, i in enumerate(idx):
        if nearest[j] < scenario.collision_radius:
            statuses[i] = Status.COLLISION_AIRCRAFT
        elif in_core[j] or below[j]:
            statuses[i] = Status.COLLISION_TERRAIN
        elif to_goal[j] < scenario.goal_capture_radius:
            statuses[i] = Status.REACHED_GOAL
        nmac[i] = nearest[j] < scenario.separation_threshold
    sep = float(nearest.min()) if nearest.size else math.inf
    return TerminalReport(statuses, nmac, sep)


def decision_step(
    states: np.ndarray,
    goals: np.ndarray,
    intruders: tuple[np.ndarray, np.ndarray],
    scenario: Scenario,
    commands: np.ndarray | None = None,
    workers: int = 1,
    prune: bool = True,
) -> tuple[np.ndarray, ValuationGrid]:
    """One pass of the pipeline for ``(n, 12)`` states; returns next states.

    The next state is the first projected step of each aircraft's selected
    action, so every aircraft decides against the same snapshot.
    """
    if commands is None:
        commands = scenario.actions.as_array()
    peaks = build_step_peaks(states, goals, intruders, scenario.terrain_array)
    proj = forward_project(states, commands, scenario.limits, scenario.dt, scenario.window)
    grid = evaluate(
        proj,
        peaks,
        penalty_alt=scenario.limits.hard_deck_altitude,
        penalty_scale=scenario.penalty_scale,
        workers=workers,
        prune=prune,
    )
    rows = np.arange(states.shape[0])
    return proj.states[rows, grid.best_action, 0], grid


def _as_snapshot(store: PlanStore | PlanSnapshot | None) -> PlanSnapshot:
    if store is None:
        return PlanSnapshot(())
    if isinstance(store, PlanStore):
        return store.snapshot()
    return store


def simulate_batch(
    initial_states: Sequence[AircraftState],
    goals: Sequence[Sequence[float]],
    store: PlanStore | PlanSnapshot | None,
    scenario: Scenario,
    aircraft_ids: Sequence[str] | None = None,
    plan_ids: Sequence[str] | None = None,
    workers: int = 1,
    prune: bool = True,
) -> SimOutcome:
    """Fly every aircraft from its initial state until all are terminal.

    Each aircraft departs at its initial state's clock, rounded up to the
    shared ``dt`` grid that starts at the earliest departure. Aircraft that
    have not departed, or have already terminated, neither move nor appear as
    traffic to the others. Stored plans are read from one snapshot taken at
    the start.
    """
    problems = validate_scenario(scenario)
    if problems:
        raise ValueError("invalid scenario: " + "; ".join(problems))
    n = len(initial_states)
    if n == 0:
        raise ValueError("batch is empty")
    goals_arr = np.asarray(goals, dtype=np.float64).reshape(-1, 3)
    if goals_arr.shape[0] != n:
        raise ValueError(f"got {n} aircraft but {goals_arr.shape[0]} goals")
    aircraft_ids = list(aircraft_ids) if aircraft_ids is not None else [f"AC{i}" for i in range(n)]
    plan_ids = list(plan_ids) if plan_ids is not None else list(aircraft_ids)
    snap = _as_snapshot(store)
    dt = scenario.dt
    terrain = scenario.terrain_array
    commands = scenario.actions.as_array()

    states = states_to_array(initial_states)
    departures = states[:, ICLOCK].copy()
    t0 = float(departures.min())
    start = np.ceil((departures - t0) / dt - 1e-9).astype(np.int64)
    start = np.maximum(start, 0)

    statuses: list[Status | None] = [None] * n
    nmac = np.zeros(n, dtype=bool)
    history: list[list[np.ndarray]] = [[] for _ in range(n)]
    min_sep = math.inf
    seps: list[float] = []

    def clock_at(step: int) -> float:
        return t0 + step * dt

    def launch(step: int) -> None:
        for i in np.nonzero(start == step)[0]:
            states[i, ICLOCK] = clock_at(step)
            history[i].append(states[i].copy())

    def airborne(step: int) -> np.ndarray:
        return (start <= step) & np.array([s is None for s in statuses])

    def check(step: int, intruder_pos: np.ndarray) -> None:
        nonlocal min_sep
        mask = airborne(step)
        report = check_terminal(states[:, IX : IZ + 1], goals_arr, intruder_pos, terrain, scenario, mask)
        for i in np.nonzero(mask)[0]:
            if report.statuses[i] is not None:
                statuses[i] = report.statuses[i]
        nmac[:] |= report.nmac
        if math.isfinite(report.min_separation):
            min_sep = min(min_sep, report.min_separation)
            seps.append(report.min_separation)

    step = 0
    launch(0)
    pos, vel, _ = snap.sample(clock_at(0))
    check(0, pos)

    while True:
        flying = airborne(step)
        pending = (start > step) & np.array([s is None for s in statuses])
        if not flying.any() and not pending.any():
            break
        if step >= scenario.max_steps:
            break
        if flying.any():
            idx = np.nonzero(flying)[0]
            nxt, _ = decision_step(
                states[idx], goals_arr[idx], (pos, vel), scenario, commands, workers, prune
            )
            states[idx] = nxt
        step += 1
        clock = clock_at(step)
        if flying.any():
            states[idx, ICLOCK] = clock
            for i in idx:
                history[i].append(states[i].copy())
        launch(step)
        pos, vel, _ = snap.sample(clock)
        check(step, pos)

    final = [Status.TIMEOUT if s is None else s for s in statuses]
    for i in range(n):
        if not history[i]:
            history[i].append(states[i].copy())
    trajectories = [
        FlightPlan(
            plan_ids[i],
            aircraft_ids[i],
            float(history[i][0][ICLOCK]),
            dt,
            plan_rows(np.vstack(history[i])),
            goals_arr[i],
        )
        for i in range(n)
    ]
    log.debug("simulated %d aircraft for %d steps: %s", n, step, [s.value for s in final])
    return SimOutcome(final, trajectories, nmac.tolist(), min_sep, step, seps)


def write_trajectory_csv(plans: Sequence[FlightPlan], path: str | Path) -> None:
    """One row per sample per aircraft, ordered by time then batch order."""
    rows = []
    for order, plan in enumerate(plans):
        for r in plan.rows:
            rows.append((r[0], order, plan.aircraft_id, r))
    rows.sort(key=lambda item: (item[0], item[1]))
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(TRAJECTORY_HEADER)
        for _, _, aircraft_id, r in rows:
            out.writerow([repr(float(r[0])), aircraft_id, *(repr(float(v)) for v in r[1:])])
