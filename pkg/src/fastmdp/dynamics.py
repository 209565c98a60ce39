"""Kinematic point-mass forward projection.

The scalar :func:`step_dynamics` and the array path used by
:func:`forward_project` apply the same floating-point operations in the same
order, so a serial rollout reproduces the dense table bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .domain import (
    IBANK,
    ICLOCK,
    IHEADING,
    IRESERVED,
    ISPEED,
    IVRATE,
    IVX,
    IVY,
    IVZ,
    IX,
    IY,
    IZ,
    STATE_SIZE,
    Action,
    ActionSet,
    AircraftLimits,
    AircraftState,
    states_to_array,
)


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def step_dynamics(
    s: AircraftState, a: Action, dt: float, limits: AircraftLimits
) -> AircraftState:
    turn = _clamp(a.turn_rate_cmd, -limits.turn_rate_max, limits.turn_rate_max)
    accel = _clamp(a.accel_cmd, -limits.accel_max, limits.accel_max)
    heading = s.heading + turn * dt
    speed = _clamp(s.speed + accel * dt, limits.speed_min, limits.speed_max)
    vrate = _clamp(a.vertical_rate_cmd, -limits.climb_rate_max, limits.climb_rate_max)
    vx = speed * math.cos(heading)
    vy = speed * math.sin(heading)
    x, y, z = s.position
    return AircraftState(
        position=(x + vx * dt, y + vy * dt, z + vrate * dt),
        heading=heading,
        speed=speed,
        vertical_rate=vrate,
        bank_angle=s.bank_angle,
        clock=s.clock + dt,
    )


class DynamicsModel(Protocol):
    """Anything that can roll dense ``(n, 12)`` states forward under ``(A, 3)`` commands."""

    def project(
        self,
        batch: np.ndarray,
        commands: np.ndarray,
        limits: AircraftLimits,
        dt: float,
        window: int,
    ) -> np.ndarray: ...


class PointMass:
    """Default model: turn rate, longitudinal acceleration and commanded climb.

    Commands are ``[turn_rate, vertical_rate, accel]``. The returned table has
    shape ``(n, A, window, 12)``.
    """

    def project(
        self,
        batch: np.ndarray,
        commands: np.ndarray,
        limits: AircraftLimits,
        dt: float,
        window: int,
    ) -> np.ndarray:
        n, a = batch.shape[0], commands.shape[0]
        table = np.empty((n, a, window, STATE_SIZE), dtype=np.float64)
        turn = np.clip(commands[:, 0], -limits.turn_rate_max, limits.turn_rate_max)[None, :]
        vrate = np.clip(commands[:, 1], -limits.climb_rate_max, limits.climb_rate_max)[None, :]
        accel = np.clip(commands[:, 2], -limits.accel_max, limits.accel_max)[None, :]
        vrate = np.broadcast_to(vrate, (n, a))
        vz_step = vrate * dt

        x = np.broadcast_to(batch[:, IX, None], (n, a))
        y = np.broadcast_to(batch[:, IY, None], (n, a))
        z = np.broadcast_to(batch[:, IZ, None], (n, a))
        heading = np.broadcast_to(batch[:, IHEADING, None], (n, a))
        speed = np.broadcast_to(batch[:, ISPEED, None], (n, a))
        clock = np.broadcast_to(batch[:, ICLOCK, None], (n, a))

        table[..., IBANK] = batch[:, IBANK, None, None]
        table[..., IRESERVED] = batch[:, IRESERVED, None, None]
        for k in range(window):
            heading = heading + turn * dt
            speed = np.clip(speed + accel * dt, limits.speed_min, limits.speed_max)
            vx = speed * np.cos(heading)
            vy = speed * np.sin(heading)
            x = x + vx * dt
            y = y + vy * dt
            z = z + vz_step
            clock = clock + dt
            out = table[:, :, k]
            out[..., IX] = x
            out[..., IY] = y
            out[..., IZ] = z
            out[..., IVX] = vx
            out[..., IVY] = vy
            out[..., IVZ] = vrate
            out[..., IHEADING] = heading
            out[..., ISPEED] = speed
            out[..., IVRATE] = vrate
            out[..., ICLOCK] = clock
        return table


POINT_MASS = PointMass()


@dataclass(frozen=True)
class ProjectionTable:
    """Projected states indexed ``[aircraft, action, step]``.

    Step ``k`` of the table is the state after ``k + 1`` applications of the
    dynamics, i.e. the table holds steps 1..W.
    """

    states: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        n, a, w, _ = self.states.shape
        return (n, a, w)

    @property
    def positions(self) -> np.ndarray:
        return self.states[..., IX : IZ + 1]

    def state(self, aircraft: int, action: int, step: int) -> AircraftState:
        return AircraftState.from_array(self.states[aircraft, action, step])


def forward_project(
    batch: Sequence[AircraftState] | np.ndarray,
    actions: ActionSet | np.ndarray,
    limits: AircraftLimits,
    dt: float,
    window: int,
    model: DynamicsModel = POINT_MASS,
) -> ProjectionTable:
    """Roll every aircraft forward under every action for ``window`` steps.

    Work is data-parallel over (aircraft, action) pairs; each rollout is
    sequential in time.
    """
    if not isinstance(batch, np.ndarray):
        batch = states_to_array(batch)
    commands = actions.as_array() if isinstance(actions, ActionSet) else np.asarray(actions)
    batch = np.asarray(batch, dtype=np.float64).reshape(-1, STATE_SIZE)
    return ProjectionTable(model.project(batch, commands, limits, dt, window))
