"""Core value types shared by every stage of the planner.

All coordinates are in a flat local frame: x east, y north, z altitude, in
meters. Times are seconds since the scenario epoch. Heading is measured
counter-clockwise from east, so heading 0 flies along +x.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCENARIO_SCHEMA_VERSION = 1

# Fixed 12-scalar state layout used by every dense state array.
STATE_FIELDS = (
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "vz",
    "heading",
    "speed",
    "vertical_rate",
    "bank_angle",
    "clock",
    "reserved",
)
STATE_SIZE = len(STATE_FIELDS)
(
    IX,
    IY,
    IZ,
    IVX,
    IVY,
    IVZ,
    IHEADING,
    ISPEED,
    IVRATE,
    IBANK,
    ICLOCK,
    IRESERVED,
) = range(STATE_SIZE)

# Dense peak row layout: [reward magnitude, discount, x, y, z, radius].
PEAK_SIZE = 6


def _vec3(value: Iterable[float]) -> tuple[float, float, float]:
    x, y, z = (float(v) for v in value)
    return (x, y, z)


class PeakKind(str, Enum):
    GOAL = "goal"
    BATCH_AIRCRAFT = "batch_aircraft"
    INTRUDER = "intruder"
    TERRAIN = "terrain"


@dataclass(frozen=True)
class Peak:
    """A reward source in standard positive form.

    ``reward_magnitude`` is always stored as an absolute value; goals add
    value, every other kind subtracts it.
    """

    reward_magnitude: float
    discount: float
    position: tuple[float, float, float]
    radius: float
    kind: PeakKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "reward_magnitude", abs(float(self.reward_magnitude)))
        object.__setattr__(self, "kind", PeakKind(self.kind))

    @property
    def is_positive(self) -> bool:
        return self.kind is PeakKind.GOAL

    def as_row(self) -> np.ndarray:
        return np.array(
            [self.reward_magnitude, self.discount, *self.position, self.radius],
            dtype=np.float64,
        )

    @classmethod
    def from_row(cls, row: Sequence[float], kind: PeakKind) -> "Peak":
        r, g, x, y, z, radius = (float(v) for v in row)
        return cls(r, g, (x, y, z), radius, kind)

    def violations(self) -> list[str]:
        out = []
        if not 0.0 < self.discount < 1.0:
            out.append("discount out of (0,1)")
        if not self.radius > 0.0:
            out.append("radius must be positive")
        if math.isinf(self.radius) != (self.kind is PeakKind.GOAL):
            out.append("radius must be infinite exactly for goal peaks")
        return out


def peaks_to_array(peaks: Iterable[Peak]) -> np.ndarray:
    rows = [p.as_row() for p in peaks]
    if not rows:
        return np.empty((0, PEAK_SIZE), dtype=np.float64)
    return np.vstack(rows)


def array_to_peaks(rows: np.ndarray, kind: PeakKind) -> list[Peak]:
    return [Peak.from_row(row, kind) for row in np.asarray(rows)]


@dataclass(frozen=True)
class AircraftLimits:
    speed_min: float = 5.0
    speed_max: float = 30.0
    accel_max: float = 3.0
    turn_rate_max: float = 1.0
    climb_rate_max: float = 10.0
    hard_deck_altitude: float = 100.0

    def violations(self) -> list[str]:
        out = []
        for name in (
            "speed_min",
            "speed_max",
            "accel_max",
            "turn_rate_max",
            "climb_rate_max",
            "hard_deck_altitude",
        ):
            if not getattr(self, name) > 0.0:
                out.append(f"{name} must be positive")
        if not self.speed_min < self.speed_max:
            out.append("speed_min must be below speed_max")
        return out


@dataclass(frozen=True)
class AircraftState:
    """Kinematic state of one aircraft.

    Velocity is derived from heading, horizontal speed and vertical rate on
    every access, so it can never drift out of sync with them.
    """

    position: tuple[float, float, float]
    heading: float
    speed: float
    vertical_rate: float = 0.0
    bank_angle: float = 0.0
    clock: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _vec3(self.position))
        for name in ("heading", "speed", "vertical_rate", "bank_angle", "clock"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def velocity(self) -> tuple[float, float, float]:
        return (
            self.speed * math.cos(self.heading),
            self.speed * math.sin(self.heading),
            self.vertical_rate,
        )

    @property
    def altitude(self) -> float:
        return self.position[2]

    def to_array(self) -> np.ndarray:
        vx, vy, vz = self.velocity
        return np.array(
            [
                *self.position,
                vx,
                vy,
                vz,
                self.heading,
                self.speed,
                self.vertical_rate,
                self.bank_angle,
                self.clock,
                0.0,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, row: Sequence[float]) -> "AircraftState":
        row = np.asarray(row, dtype=np.float64)
        return cls(
            position=(row[IX], row[IY], row[IZ]),
            heading=row[IHEADING],
            speed=row[ISPEED],
            vertical_rate=row[IVRATE],
            bank_angle=row[IBANK],
            clock=row[ICLOCK],
        )

    def violations(self, limits: AircraftLimits) -> list[str]:
        out = []
        if not limits.speed_min <= self.speed <= limits.speed_max:
            out.append("speed outside limits")
        if abs(self.vertical_rate) > limits.climb_rate_max:
            out.append("vertical rate outside limits")
        return out


def states_to_array(states: Sequence[AircraftState]) -> np.ndarray:
    if not states:
        return np.empty((0, STATE_SIZE), dtype=np.float64)
    return np.vstack([s.to_array() for s in states])


@dataclass(frozen=True)
class Action:
    turn_rate_cmd: float = 0.0
    vertical_rate_cmd: float = 0.0
    accel_cmd: float = 0.0

    def violations(self, limits: AircraftLimits) -> list[str]:
        out = []
        if abs(self.turn_rate_cmd) > limits.turn_rate_max:
            out.append("turn rate command outside limits")
        if abs(self.vertical_rate_cmd) > limits.climb_rate_max:
            out.append("vertical rate command outside limits")
        if abs(self.accel_cmd) > limits.accel_max:
            out.append("acceleration command outside limits")
        return out


def command_levels(limit: float, count: int) -> tuple[float, ...]:
    """Uniformly spaced command levels over [-limit, +limit] that contain 0.

    An odd count spans the interval exactly. An even count cannot be both
    symmetric and contain 0, so the most negative level is dropped.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if count == 1:
        return (0.0,)
    n = count if count % 2 else count + 1
    half = n // 2
    levels = [limit * (k / half) for k in range(-half, half + 1)]
    if n != count:
        levels = levels[1:]
    return tuple(float(v) for v in levels)


@dataclass(frozen=True)
class ActionSet:
    """Discretized commands; the candidate actions are their Cartesian product.

    Action index order is turn rate (slowest), vertical rate, acceleration
    (fastest), matching ``itertools.product``.
    """

    turn_rates: tuple[float, ...]
    vertical_rates: tuple[float, ...]
    accels: tuple[float, ...]

    def __post_init__(self) -> None:
        for name in ("turn_rates", "vertical_rates", "accels"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @classmethod
    def uniform(
        cls,
        limits: AircraftLimits,
        counts: tuple[int, int, int] = (15, 10, 9),
    ) -> "ActionSet":
        n_turn, n_vert, n_acc = counts
        return cls(
            command_levels(limits.turn_rate_max, n_turn),
            command_levels(limits.climb_rate_max, n_vert),
            command_levels(limits.accel_max, n_acc),
        )

    def __len__(self) -> int:
        return len(self.turn_rates) * len(self.vertical_rates) * len(self.accels)

    def as_array(self) -> np.ndarray:
        """(A, 3) array of [turn_rate, vertical_rate, accel] commands."""
        rows = list(itertools.product(self.turn_rates, self.vertical_rates, self.accels))
        return np.array(rows, dtype=np.float64).reshape(-1, 3)

    def action(self, index: int) -> Action:
        t, v, a = self.as_array()[index]
        return Action(float(t), float(v), float(a))

    @property
    def hold_index(self) -> int:
        """Index of the all-zero command."""
        n_v, n_a = len(self.vertical_rates), len(self.accels)
        return (
            self.turn_rates.index(0.0) * n_v * n_a
            + self.vertical_rates.index(0.0) * n_a
            + self.accels.index(0.0)
        )

    def violations(self, limits: AircraftLimits) -> list[str]:
        out = []
        for name in ("turn_rates", "vertical_rates", "accels"):
            values = getattr(self, name)
            if values.count(0.0) != 1:
                out.append(f"{name} must contain 0 exactly once")
        bounds = (
            ("turn_rates", limits.turn_rate_max),
            ("vertical_rates", limits.climb_rate_max),
            ("accels", limits.accel_max),
        )
        for name, bound in bounds:
            if any(abs(v) > bound for v in getattr(self, name)):
                out.append(f"{name} exceed aircraft limits")
        return out


@dataclass(frozen=True)
class Scenario:
    """Static environment and tuning shared by every request."""

    terrain_peaks: tuple[Peak, ...] = ()
    vertiports: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    limits: AircraftLimits = field(default_factory=AircraftLimits)
    dt: float = 0.1
    window: int = 10
    goal_capture_radius: float = 100.0
    separation_threshold: float = 150.0
    collision_radius: float = 30.0
    max_steps: int = 18_000
    action_counts: tuple[int, int, int] = (15, 10, 9)
    initial_speed: float | None = None
    terrain_core_ratio: float = 0.5
    hard_deck_tolerance: float = 50.0
    penalty_scale: float = 1000.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "terrain_peaks", tuple(self.terrain_peaks))
        object.__setattr__(self, "action_counts", tuple(int(c) for c in self.action_counts))
        object.__setattr__(
            self, "vertiports", {k: _vec3(v) for k, v in dict(self.vertiports).items()}
        )

    @property
    def actions(self) -> ActionSet:
        return ActionSet.uniform(self.limits, self.action_counts)

    @property
    def terrain_array(self) -> np.ndarray:
        return peaks_to_array(self.terrain_peaks)

    @property
    def cruise_speed(self) -> float:
        if self.initial_speed is not None:
            return self.initial_speed
        return 0.5 * (self.limits.speed_min + self.limits.speed_max)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCENARIO_SCHEMA_VERSION,
            "terrain_peaks": [
                {
                    "reward_magnitude": p.reward_magnitude,
                    "discount": p.discount,
                    "position": list(p.position),
                    "radius": p.radius,
                }
                for p in self.terrain_peaks
            ],
            "vertiports": {k: list(v) for k, v in self.vertiports.items()},
            "limits": dict(self.limits.__dict__),
            "dt": self.dt,
            "window": self.window,
            "goal_capture_radius": self.goal_capture_radius,
            "separation_threshold": self.separation_threshold,
            "collision_radius": self.collision_radius,
            "max_steps": self.max_steps,
            "action_counts": list(self.action_counts),
            "initial_speed": self.initial_speed,
            "terrain_core_ratio": self.terrain_core_ratio,
            "hard_deck_tolerance": self.hard_deck_tolerance,
            "penalty_scale": self.penalty_scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        version = data.get("schema_version")
        if version != SCENARIO_SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema_version: {version!r}")
        data = dict(data)
        data.pop("schema_version")
        terrain = tuple(
            Peak(
                t.get("reward_magnitude", 1000.0),
                t.get("discount", 0.99),
                t["position"],
                t["radius"],
                PeakKind.TERRAIN,
            )
            for t in data.pop("terrain_peaks", [])
        )
        limits = AircraftLimits(**data.pop("limits", {}))
        if "action_counts" in data:
            data["action_counts"] = tuple(data["action_counts"])
        return cls(terrain_peaks=terrain, limits=limits, **data)


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")


def validate_scenario(s: Scenario) -> list[str]:
    """Return a description of every broken invariant; empty when valid."""
    out: list[str] = []
    if not s.dt > 0.0:
        out.append("dt must be positive")
    if s.window < 1:
        out.append("window must be at least 1")
    if not s.goal_capture_radius > 0.0:
        out.append("goal_capture_radius must be positive")
    if not s.separation_threshold > 0.0:
        out.append("separation_threshold must be positive")
    if not s.collision_radius > 0.0:
        out.append("collision_radius must be positive")
    if s.max_steps < 1:
        out.append("max_steps must be at least 1")
    if not 0.0 < s.terrain_core_ratio <= 1.0:
        out.append("terrain_core_ratio out of (0,1]")
    out.extend(s.limits.violations())
    for peak in s.terrain_peaks:
        if peak.kind is not PeakKind.TERRAIN:
            out.append("terrain peaks must have kind terrain")
        out.extend(peak.violations())
    if any(c < 1 for c in s.action_counts):
        out.append("action counts must be at least 1")
    elif not s.limits.violations():
        out.extend(s.actions.violations(s.limits))
    if s.initial_speed is not None and not (
        s.limits.speed_min <= s.initial_speed <= s.limits.speed_max
    ):
        out.append("initial_speed outside limits")
    return out
