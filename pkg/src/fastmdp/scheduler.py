"""First-come-first-served pre-departure flight planning.

Every request is solved against an immutable snapshot of the accepted plans.
A trajectory that reaches its goal is then certified by :func:`validate_plan`,
a purely geometric check that shares no code with the risk-well solver, before
it is committed to the store.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .domain import AircraftState, Scenario, validate_scenario
from .planstore import FlightPlan, PlanSnapshot, PlanStore
from .simulation import Status, simulate_batch

log = logging.getLogger(__name__)


class Decision(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class RejectionReason(str, Enum):
    SIM_COLLISION = "sim_collision"
    TIMEOUT = "timeout"
    VALIDATION_FAILED = "validation_failed"


@dataclass(frozen=True)
class PlanRequest:
    aircraft_id: str
    source: tuple[float, float, float]
    destination: tuple[float, float, float]
    requested_departure: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "source", tuple(float(v) for v in self.source))
        object.__setattr__(self, "destination", tuple(float(v) for v in self.destination))
        object.__setattr__(self, "requested_departure", float(self.requested_departure))

    def violations(self, scenario: Scenario) -> list[str]:
        out = []
        if len(self.source) != 3 or len(self.destination) != 3:
            out.append("source and destination must be 3-vectors")
            return out
        if self.source == self.destination:
            out.append("source and destination coincide")
        deck = scenario.limits.hard_deck_altitude
        if self.source[2] < deck or self.destination[2] < deck:
            out.append("source and destination must be at or above the hard deck")
        return out

    def to_dict(self) -> dict:
        return {
            "aircraft_id": self.aircraft_id,
            "source": list(self.source),
            "destination": list(self.destination),
            "requested_departure": self.requested_departure,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlanRequest":
        return cls(
            str(data["aircraft_id"]),
            tuple(data["source"]),
            tuple(data["destination"]),
            float(data.get("requested_departure", 0.0)),
        )


@dataclass(frozen=True)
class ValidationResult:
    passed: bool
    min_separation: float
    problems: tuple[str, ...] = ()


@dataclass
class PlanResponse:
    request: PlanRequest
    status: Decision
    plan: FlightPlan | None = None
    rejection_reason: RejectionReason | None = None
    min_separation: float = math.inf
    step_count: int = 0
    solve_seconds: float = 0.0
    problems: list[str] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.status is Decision.ACCEPTED

    def to_dict(self) -> dict:
        return {
            "aircraft_id": self.request.aircraft_id,
            "status": self.status.value,
            "plan_id": self.plan.plan_id if self.plan is not None else None,
            "rejection_reason": self.rejection_reason.value if self.rejection_reason else None,
            "min_separation": None if math.isinf(self.min_separation) else self.min_separation,
            "step_count": self.step_count,
            "solve_seconds": self.solve_seconds,
            "problems": list(self.problems),
        }


def validate_plan(
    candidate: FlightPlan,
    snapshot: PlanSnapshot | PlanStore | Iterable[FlightPlan],
    terrain: Sequence | np.ndarray,
    scenario: Scenario,
) -> ValidationResult:
    """Certify a trajectory against stored plans and terrain.

    Stored plans are linearly interpolated at every candidate sample clock
    they cover; the 3D distance there must be at least
    ``scenario.separation_threshold``. Every candidate sample must also lie
    outside each terrain core (``terrain_core_ratio`` times the well radius)
    and no lower than ``hard_deck_altitude - hard_deck_tolerance``.
    """
    if isinstance(snapshot, PlanStore):
        snapshot = snapshot.snapshot()
    problems = list(candidate.violations())
    clocks = candidate.clocks
    pos = candidate.positions
    eps = 1e-6 * candidate.dt
    min_sep = math.inf
    for other in snapshot:
        t = other.clocks
        mask = (clocks >= t[0] - eps) & (clocks <= t[-1] + eps)
        if not mask.any():
            continue
        q = np.column_stack([np.interp(clocks[mask], t, other.positions[:, j]) for j in range(3)])
        d = np.linalg.norm(pos[mask] - q, axis=1)
        closest = float(d.min())
        min_sep = min(min_sep, closest)
        if closest < scenario.separation_threshold:
            k = int(np.argmin(d))
            problems.append(
                f"separation {closest:.1f} m from plan {other.plan_id} "
                f"at t={clocks[mask][k]:.1f}"
            )

    terrain = np.asarray(
        terrain if isinstance(terrain, np.ndarray) else [p.as_row() for p in terrain],
        dtype=np.float64,
    ).reshape(-1, 6)
    for row in terrain:
        core = scenario.terrain_core_ratio * row[5]
        d = np.linalg.norm(pos - row[2:5], axis=1)
        if (d < core).any():
            problems.append(f"inside terrain core at ({row[2]:.0f}, {row[3]:.0f}, {row[4]:.0f})")
    floor = scenario.limits.hard_deck_altitude - scenario.hard_deck_tolerance
    if (pos[:, 2] < floor).any():
        problems.append(f"descends below {floor:.0f} m")
    return ValidationResult(not problems, min_sep, tuple(problems))


def initial_state(req: PlanRequest, scenario: Scenario) -> AircraftState:
    """Level flight at cruise speed, pointed at the destination."""
    dx = req.destination[0] - req.source[0]
    dy = req.destination[1] - req.source[1]
    return AircraftState(
        req.source,
        heading=math.atan2(dy, dx),
        speed=scenario.cruise_speed,
        clock=req.requested_departure,
    )


def _next_plan_id(store: PlanStore) -> str:
    n = len(store) + 1
    while f"P{n:06d}" in store:
        n += 1
    return f"P{n:06d}"


def process_batch(
    reqs: Sequence[PlanRequest],
    store: PlanStore,
    scenario: Scenario,
    workers: int = 1,
) -> list[PlanResponse]:
    """Co-simulate a batch against one snapshot and commit what validates.

    Commits happen in request order; each candidate is validated against the
    live store at its commit time, so later members of the batch are checked
    against earlier accepted ones too.
    """
    if not reqs:
        raise ValueError("batch is empty")
    problems = validate_scenario(scenario)
    if problems:
        raise ValueError("invalid scenario: " + "; ".join(problems))
    for req in reqs:
        bad = req.violations(scenario)
        if bad:
            raise ValueError(f"invalid request {req.aircraft_id!r}: {'; '.join(bad)}")

    started = time.perf_counter()
    snapshot = store.snapshot()
    outcome = simulate_batch(
        [initial_state(r, scenario) for r in reqs],
        [r.destination for r in reqs],
        snapshot,
        scenario,
        aircraft_ids=[r.aircraft_id for r in reqs],
        workers=workers,
    )
    elapsed = time.perf_counter() - started

    terrain = scenario.terrain_array
    responses = []
    for req, status, traj in zip(reqs, outcome.statuses, outcome.trajectories):
        resp = PlanResponse(
            req,
            Decision.REJECTED,
            step_count=len(traj) - 1,
            solve_seconds=elapsed,
        )
        if status in (Status.COLLISION_AIRCRAFT, Status.COLLISION_TERRAIN):
            resp.rejection_reason = RejectionReason.SIM_COLLISION
            resp.problems.append(status.value)
        elif status is Status.TIMEOUT:
            resp.rejection_reason = RejectionReason.TIMEOUT
        else:
            check = validate_plan(traj, store.snapshot(), terrain, scenario)
            resp.min_separation = check.min_separation
            if check.passed:
                plan = FlightPlan(
                    _next_plan_id(store),
                    traj.aircraft_id,
                    traj.departure_time,
                    traj.dt,
                    traj.rows,
                    traj.goal_position,
                )
                store.append(plan)
                resp.status = Decision.ACCEPTED
                resp.plan = plan
            else:
                resp.rejection_reason = RejectionReason.VALIDATION_FAILED
                resp.problems.extend(check.problems)
        log.info(
            "%s: %s%s",
            req.aircraft_id,
            resp.status.value,
            f" ({resp.rejection_reason.value})" if resp.rejection_reason else "",
        )
        responses.append(resp)
    return responses


def process_request(
    req: PlanRequest, store: PlanStore, scenario: Scenario, workers: int = 1
) -> PlanResponse:
    return process_batch([req], store, scenario, workers)[0]


def process_requests(
    reqs: Iterable[PlanRequest], store: PlanStore, scenario: Scenario, workers: int = 1
) -> list[PlanResponse]:
    """Handle single-aircraft requests strictly in arrival order."""
    return [process_request(r, store, scenario, workers) for r in reqs]
