"""Accepted flight plans and time-indexed intruder sampling.

File format: UTF-8, one JSON object per line::

    {"schema_version": 1, "plan_id": "...", "aircraft_id": "...",
     "departure_time": 0.0, "dt": 0.1, "goal_position": [x, y, z],
     "states": [[t, x, y, z, heading, speed, vertical_rate], ...]}

Floats are written with ``repr`` precision so a save/load cycle is exact.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .domain import ICLOCK, IHEADING, ISPEED, IVRATE, IX, IY, IZ, AircraftState, states_to_array

PLAN_SCHEMA_VERSION = 1
ROW_FIELDS = ("t", "x", "y", "z", "heading", "speed", "vertical_rate")
# Tolerance, in steps, when mapping a clock onto a plan's sample grid.
CLOCK_EPS = 1e-6


class PlanStoreError(Exception):
    """Raised for duplicate plans and unreadable store files."""


class FlightPlan:
    """An accepted trajectory sampled every ``dt`` seconds.

    Samples are held as a read-only ``(n, 7)`` array with columns
    ``t, x, y, z, heading, speed, vertical_rate``.
    """

    __slots__ = ("plan_id", "aircraft_id", "departure_time", "dt", "goal_position", "rows")

    def __init__(
        self,
        plan_id: str,
        aircraft_id: str,
        departure_time: float,
        dt: float,
        rows: np.ndarray | Sequence[AircraftState],
        goal_position: Sequence[float],
    ) -> None:
        if not isinstance(rows, np.ndarray):
            rows = plan_rows(rows)
        rows = np.array(rows, dtype=np.float64).reshape(-1, len(ROW_FIELDS))
        rows.setflags(write=False)
        self.plan_id = str(plan_id)
        self.aircraft_id = str(aircraft_id)
        self.departure_time = float(departure_time)
        self.dt = float(dt)
        self.goal_position = tuple(float(v) for v in goal_position)
        self.rows = rows

    def __repr__(self) -> str:
        return (
            f"FlightPlan(plan_id={self.plan_id!r}, aircraft_id={self.aircraft_id!r}, "
            f"departure_time={self.departure_time}, samples={len(self.rows)})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlightPlan):
            return NotImplemented
        return (
            self.plan_id == other.plan_id
            and self.aircraft_id == other.aircraft_id
            and self.departure_time == other.departure_time
            and self.dt == other.dt
            and self.goal_position == other.goal_position
            and np.array_equal(self.rows, other.rows)
        )

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def clocks(self) -> np.ndarray:
        return self.rows[:, 0]

    @property
    def positions(self) -> np.ndarray:
        return self.rows[:, 1:4]

    @property
    def start_clock(self) -> float:
        return float(self.rows[0, 0])

    @property
    def end_clock(self) -> float:
        return float(self.rows[-1, 0])

    @property
    def states(self) -> list[AircraftState]:
        return [
            AircraftState((r[1], r[2], r[3]), heading=r[4], speed=r[5], vertical_rate=r[6], clock=r[0])
            for r in self.rows
        ]

    def violations(self, tol: float = 1e-9) -> list[str]:
        out = []
        if len(self.rows) == 0:
            out.append("plan has no states")
            return out
        if not self.dt > 0:
            out.append("dt must be positive")
        if abs(self.rows[0, 0] - self.departure_time) > tol:
            out.append("first state clock differs from departure_time")
        steps = np.diff(self.rows[:, 0])
        if steps.size and np.max(np.abs(steps - self.dt)) > tol * max(1.0, abs(self.end_clock)):
            out.append("state clocks are not spaced by dt")
        if not np.all(np.isfinite(self.rows)):
            out.append("non-finite values in states")
        return out

    def to_record(self) -> dict:
        return {
            "schema_version": PLAN_SCHEMA_VERSION,
            "plan_id": self.plan_id,
            "aircraft_id": self.aircraft_id,
            "departure_time": self.departure_time,
            "dt": self.dt,
            "goal_position": list(self.goal_position),
            "states": self.rows.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "FlightPlan":
        version = rec.get("schema_version")
        if version != PLAN_SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version!r}")
        states = rec["states"]
        if not states or any(len(row) != len(ROW_FIELDS) for row in states):
            raise ValueError(f"states must be non-empty rows of {len(ROW_FIELDS)} values")
        return cls(
            rec["plan_id"],
            rec["aircraft_id"],
            rec["departure_time"],
            rec["dt"],
            np.array(states, dtype=np.float64),
            rec["goal_position"],
        )


def plan_rows(states: Sequence[AircraftState] | np.ndarray) -> np.ndarray:
    """Project full 12-scalar states onto the 7-column plan layout."""
    arr = states if isinstance(states, np.ndarray) else states_to_array(states)
    if arr.shape[0] == 0:
        return np.empty((0, len(ROW_FIELDS)))
    return arr[:, [ICLOCK, IX, IY, IZ, IHEADING, ISPEED, IVRATE]].copy()


def sample_intruder(
    plan: FlightPlan, clock: float
) -> tuple[np.ndarray, np.ndarray] | None:
    """Interpolated position and finite-difference velocity at ``clock``.

    Returns ``None`` when ``clock`` falls outside the plan's sampled interval.
    """
    n = len(plan.rows)
    k_real = (clock - plan.start_clock) / plan.dt
    if k_real < -CLOCK_EPS or k_real > (n - 1) + CLOCK_EPS:
        return None
    pos = plan.positions
    k = min(int(np.floor(k_real + CLOCK_EPS)), n - 1)
    frac = k_real - k
    if abs(frac) < CLOCK_EPS:
        frac = 0.0
    if n == 1:
        return pos[0].copy(), np.zeros(3)
    if k == n - 1:
        return pos[k].copy(), (pos[k] - pos[k - 1]) / plan.dt
    delta = pos[k + 1] - pos[k]
    return pos[k] + frac * delta, delta / plan.dt


class PlanSnapshot:
    """Immutable view of the store at one moment, with packed sample arrays."""

    def __init__(self, plans: Iterable[FlightPlan] = ()) -> None:
        self.plans: tuple[FlightPlan, ...] = tuple(plans)
        n = len(self.plans)
        self._start = np.array([p.start_clock for p in self.plans], dtype=np.float64)
        self._dt = np.array([p.dt for p in self.plans], dtype=np.float64)
        self._count = np.array([len(p) for p in self.plans], dtype=np.int64)
        self._offset = np.zeros(n, dtype=np.int64)
        if n:
            self._offset[1:] = np.cumsum(self._count)[:-1]
            self._pos = np.concatenate([p.positions for p in self.plans])
        else:
            self._pos = np.empty((0, 3))

    def __len__(self) -> int:
        return len(self.plans)

    def __iter__(self):
        return iter(self.plans)

    def sample(self, clock: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, velocities and plan indices of every plan active at ``clock``.

        Same rules as :func:`sample_intruder`, evaluated for all plans at once;
        results follow acceptance order.
        """
        if not self.plans:
            return np.empty((0, 3)), np.empty((0, 3)), np.empty(0, dtype=np.int64)
        k_real = (clock - self._start) / self._dt
        last = self._count - 1
        active = (k_real >= -CLOCK_EPS) & (k_real <= last + CLOCK_EPS)
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            return np.empty((0, 3)), np.empty((0, 3)), idx
        kr = k_real[idx]
        lastk = last[idx]
        k = np.minimum(np.floor(kr + CLOCK_EPS).astype(np.int64), lastk)
        frac = kr - k
        frac[np.abs(frac) < CLOCK_EPS] = 0.0
        # Bracketing pair (lo, hi); at the final sample use the previous segment.
        lo = np.where(k == lastk, np.maximum(k - 1, 0), k)
        hi = np.where(k == lastk, k, k + 1)
        base = self._offset[idx]
        p_lo = self._pos[base + lo]
        p_hi = self._pos[base + hi]
        delta = p_hi - p_lo
        vel = delta / self._dt[idx, None]
        at_end = (k == lastk)[:, None]
        pos = np.where(at_end, p_hi, p_lo + frac[:, None] * delta)
        return pos, vel, idx


class PlanStore:
    """Accepted plans in acceptance order, optionally backed by a file.

    A single writer appends; readers work from :meth:`snapshot`, which is
    immutable and never sees later appends.
    """

    def __init__(self, plans: Iterable[FlightPlan] = (), path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._snapshot = PlanSnapshot(())
        self._ids: set[str] = set()
        plans = list(plans)
        for plan in plans:
            if plan.plan_id in self._ids:
                raise PlanStoreError(f"duplicate plan_id {plan.plan_id!r}")
            self._ids.add(plan.plan_id)
        self._snapshot = PlanSnapshot(plans)

    def __len__(self) -> int:
        return len(self._snapshot)

    def __contains__(self, plan_id: str) -> bool:
        return plan_id in self._ids

    @property
    def plans(self) -> tuple[FlightPlan, ...]:
        return self._snapshot.plans

    def snapshot(self) -> PlanSnapshot:
        return self._snapshot

    def append(self, plan: FlightPlan, persist: bool = True) -> None:
        problems = plan.violations()
        if problems:
            raise PlanStoreError(f"plan {plan.plan_id!r} is malformed: {'; '.join(problems)}")
        with self._lock:
            if plan.plan_id in self._ids:
                raise PlanStoreError(f"duplicate plan_id {plan.plan_id!r}")
            if persist and self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(plan.to_record()) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            self._ids.add(plan.plan_id)
            self._snapshot = PlanSnapshot(self._snapshot.plans + (plan,))


def append_plan(store: PlanStore, plan: FlightPlan) -> PlanStore:
    store.append(plan)
    return store


def active_intruders(
    store: PlanStore | PlanSnapshot, clock: float
) -> list[tuple[np.ndarray, np.ndarray]]:
    snap = store.snapshot() if isinstance(store, PlanStore) else store
    out = []
    for plan in snap:
        sample = sample_intruder(plan, clock)
        if sample is not None:
            out.append(sample)
    return out


def load_store(path: str | Path) -> PlanStore:
    """Read a store file; a missing or empty file gives an empty store."""
    path = Path(path)
    plans = []
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    plan = FlightPlan.from_record(json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    raise PlanStoreError(f"{path}:{lineno}: bad plan record: {exc}") from exc
                problems = plan.violations()
                if problems:
                    raise PlanStoreError(f"{path}:{lineno}: {'; '.join(problems)}")
                plans.append(plan)
    try:
        return PlanStore(plans, path)
    except PlanStoreError as exc:
        raise PlanStoreError(f"{path}: {exc}") from exc


def save_store(store: PlanStore, path: str | Path) -> None:
    """Write the whole store atomically (temp file then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for plan in store.plans:
                fh.write(json.dumps(plan.to_record()) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
