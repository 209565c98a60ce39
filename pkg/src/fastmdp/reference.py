"""Serial brute-force reference for the projection and valuation pipeline.

Straight nested loops over aircraft, actions, steps and peaks, with no
pruning, blocking or vectorization. Slow; meant for cross-checking the dense
pipeline on small instances.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .domain import ActionSet, AircraftLimits, AircraftState, PeakKind, array_to_peaks
from .dynamics import step_dynamics
from .peaks import PeakSets
from .valuation import DEFAULT_PENALTY_SCALE, hard_deck_penalty, positive_value, well_value


def serial_forward_project(
    batch: Sequence[AircraftState],
    actions: ActionSet,
    limits: AircraftLimits,
    dt: float,
    window: int,
) -> list[list[list[AircraftState]]]:
    table = []
    for s0 in batch:
        rows = []
        for idx in range(len(actions)):
            a = actions.action(idx)
            s = s0
            rollout = []
            for _ in range(window):
                s = step_dynamics(s, a, dt, limits)
                rollout.append(s)
            rows.append(rollout)
        table.append(rows)
    return table


def serial_valuation(
    positions: np.ndarray,
    peaks: Sequence[PeakSets],
    penalty_alt: float,
    penalty_scale: float = DEFAULT_PENALTY_SCALE,
) -> dict[str, np.ndarray]:
    """Valuation of an ``(N, A, W, 3)`` position table by exhaustive loops."""
    n, a_count, w = positions.shape[:3]
    out = {k: np.zeros((n, a_count, w)) for k in ("v_pos", "v_neg", "v_terrain", "v_intruder", "v")}
    v_star = np.zeros((n, a_count))
    best = np.zeros(n, dtype=np.int64)
    for i in range(n):
        ps = peaks[i]
        goal = array_to_peaks(ps.positive, PeakKind.GOAL)
        batch = array_to_peaks(ps.batch_negative, PeakKind.BATCH_AIRCRAFT)
        terrain = array_to_peaks(ps.terrain_negative, PeakKind.TERRAIN)
        intruder = array_to_peaks(ps.intruder_negative, PeakKind.INTRUDER)
        for a in range(a_count):
            best_t = None
            for t in range(w):
                p = [float(c) for c in positions[i, a, t]]
                vp = 0.0
                for pk in goal:
                    vp = max(vp, positive_value(p, pk))
                vn = 0.0
                for pk in batch:
                    vn = max(vn, well_value(p, pk))
                vt = 0.0
                for pk in terrain:
                    vt = max(vt, well_value(p, pk))
                vi = 0.0
                for pk in intruder:
                    vi = max(vi, well_value(p, pk))
                value = vp - max(vn, vt, vi) - hard_deck_penalty(p[2], penalty_alt, penalty_scale)
                out["v_pos"][i, a, t] = vp
                out["v_neg"][i, a, t] = vn
                out["v_terrain"][i, a, t] = vt
                out["v_intruder"][i, a, t] = vi
                out["v"][i, a, t] = value
                if best_t is None or value > best_t:
                    best_t = value
            v_star[i, a] = best_t
        top = 0
        for a in range(1, a_count):
            if v_star[i, a] > v_star[i, top]:
                top = a
        best[i] = top
    out["v_star"] = v_star
    out["best_action"] = best
    return out
