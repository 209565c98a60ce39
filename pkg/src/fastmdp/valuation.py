"""Value of projected states and action selection.

Each peak class is reduced independently with a per-cell maximum, then the
classes are combined as ``goal - max(batch, terrain, intruder) - deck`` and
each action is scored by the best combined value along its rollout.

The per-class kernels are data-parallel over (state, peak) pairs. Peaks are
split into blocks; each block produces a private partial maximum and the
partials are merged with ``np.maximum``. Max is exact, so the result does not
depend on block size, worker count or merge order.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import IX, IZ, Peak
from .dynamics import ProjectionTable
from .peaks import PeakSets

DEFAULT_PENALTY_SCALE = 1000.0
# Target number of (state, peak) evaluations per block.
BLOCK_ELEMENTS = 1 << 18


def _distance(a: Sequence[float], b: Sequence[float]) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def _decay(magnitude: float, discount: float, distance: float) -> float:
    # Same ufunc as the dense kernels so scalar and array paths agree exactly.
    return float(magnitude * np.power(discount, distance))


def positive_value(state_pos: Sequence[float], peak: Peak) -> float:
    """``|r| * discount**d`` with no truncation."""
    return _decay(peak.reward_magnitude, peak.discount, _distance(state_pos, peak.position))


def well_value(state_pos: Sequence[float], peak: Peak) -> float:
    """``|r| * discount**d`` inside the well radius (strict), zero outside."""
    d = _distance(state_pos, peak.position)
    if not d < peak.radius:
        return 0.0
    return _decay(peak.reward_magnitude, peak.discount, d)


def hard_deck_penalty(
    altitude: float, penalty_alt: float, penalty_scale: float = DEFAULT_PENALTY_SCALE
) -> float:
    if altitude < penalty_alt:
        return max(0.0, penalty_scale - altitude)
    return 0.0


def hard_deck_penalty_array(
    altitude: np.ndarray, penalty_alt: float, penalty_scale: float = DEFAULT_PENALTY_SCALE
) -> np.ndarray:
    return np.where(altitude < penalty_alt, np.maximum(0.0, penalty_scale - altitude), 0.0)


@lru_cache(maxsize=None)
def _executor(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="fastmdp")


def _block_max(coords: tuple[np.ndarray, ...], rows: np.ndarray, truncated: bool) -> np.ndarray:
    # (peaks, points) layout: the reduction runs across contiguous rows.
    px, py, pz = coords
    dx = px[None, :] - rows[:, 2:3]
    dy = py[None, :] - rows[:, 3:4]
    dz = pz[None, :] - rows[:, 4:5]
    d = np.sqrt(dx * dx + dy * dy + dz * dz)
    v = rows[:, 0:1] * np.power(rows[:, 1:2], d)
    if truncated:
        v = np.where(d < rows[:, 5:6], v, 0.0)
    return v.max(axis=0)


def peak_field(
    points: np.ndarray,
    rows: np.ndarray,
    truncated: bool,
    workers: int = 1,
    block_elements: int = BLOCK_ELEMENTS,
) -> np.ndarray:
    """Maximum contribution of any peak in ``rows`` at each of ``points``.

    ``points`` is ``(P, 3)``, ``rows`` is ``(K, 6)``. Returns ``(P,)``, all
    zeros when ``rows`` is empty.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    coords = tuple(np.ascontiguousarray(points[:, j]) for j in range(3))
    return _field(coords, rows, truncated, workers, block_elements)


def _field(
    coords: tuple[np.ndarray, ...],
    rows: np.ndarray,
    truncated: bool,
    workers: int,
    block_elements: int = BLOCK_ELEMENTS,
) -> np.ndarray:
    p = coords[0].shape[0]
    out = np.zeros(p, dtype=np.float64)
    k = rows.shape[0]
    if k == 0 or p == 0:
        return out
    step = max(1, block_elements // p)
    spans = [(lo, min(lo + step, k)) for lo in range(0, k, step)]

    def work(span: tuple[int, int]) -> np.ndarray:
        return _block_max(coords, rows[span[0] : span[1]], truncated)

    if workers > 1 and len(spans) > 1:
        partials = _executor(workers).map(work, spans)
    else:
        partials = map(work, spans)
    for part in partials:
        np.maximum(out, part, out=out)
    return out


def prune_wells(rows: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Drop wells that cannot reach any point of the box ``[lo, hi]``.

    The box distance is computed with the same rounding-monotone operations
    as the kernel distance, so it never exceeds the computed distance of any
    point inside the box and pruning never changes a result.
    """
    if rows.shape[0] == 0:
        return rows
    c = rows[:, 2:5]
    gap = np.maximum(np.maximum(lo[None, :] - c, 0.0), c - hi[None, :])
    d = np.sqrt(gap[:, 0] * gap[:, 0] + gap[:, 1] * gap[:, 1] + gap[:, 2] * gap[:, 2])
    return rows[d < rows[:, 5]]


@dataclass
class ValuationGrid:
    """Per-(aircraft, action, step) contributions and per-action scores."""

    v_pos: np.ndarray
    v_neg: np.ndarray
    v_terrain: np.ndarray
    v_intruder: np.ndarray
    v: np.ndarray | None = None
    v_star: np.ndarray | None = None
    best_action: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.v_pos.shape


def accumulate_contributions(
    proj: ProjectionTable,
    peaks: Sequence[PeakSets],
    workers: int = 1,
    prune: bool = True,
) -> ValuationGrid:
    n, a, w = proj.shape
    if len(peaks) != n:
        raise ValueError(f"projection has {n} aircraft but {len(peaks)} peak sets")
    fields = {name: np.zeros((n, a, w)) for name in ("pos", "neg", "terrain", "intruder")}
    states = proj.states
    for i, ps in enumerate(peaks):
        coords = tuple(states[i, :, :, IX + j].ravel() for j in range(3))
        lo = np.array([c.min() for c in coords])
        hi = np.array([c.max() for c in coords])
        classes = (
            ("pos", ps.positive, False),
            ("neg", ps.batch_negative, True),
            ("terrain", ps.terrain_negative, True),
            ("intruder", ps.intruder_negative, True),
        )
        for name, rows, truncated in classes:
            if truncated and prune:
                rows = prune_wells(rows, lo, hi)
            fields[name][i] = _field(coords, rows, truncated, workers).reshape(a, w)
    return ValuationGrid(fields["pos"], fields["neg"], fields["terrain"], fields["intruder"])


def combine_value(
    grid: ValuationGrid,
    proj: ProjectionTable,
    penalty_alt: float,
    penalty_scale: float = DEFAULT_PENALTY_SCALE,
) -> ValuationGrid:
    """Fill ``grid.v`` and ``grid.v_star`` in place and return the grid."""
    worst = np.maximum(np.maximum(grid.v_neg, grid.v_terrain), grid.v_intruder)
    deck = hard_deck_penalty_array(proj.states[..., IZ], penalty_alt, penalty_scale)
    grid.v = grid.v_pos - worst - deck
    grid.v_star = grid.v.max(axis=2)
    return grid


def select_action(row: np.ndarray | Sequence[float]) -> int:
    """Index of the best value; the lowest index wins ties."""
    row = np.asarray(row, dtype=np.float64)
    if row.size == 0:
        raise ValueError("cannot select from an empty action row")
    return int(np.argmax(row))


def evaluate(
    proj: ProjectionTable,
    peaks: Sequence[PeakSets],
    penalty_alt: float,
    penalty_scale: float = DEFAULT_PENALTY_SCALE,
    workers: int = 1,
    prune: bool = True,
) -> ValuationGrid:
    """Run the full valuation pipeline: contributions, combination, selection."""
    grid = accumulate_contributions(proj, peaks, workers=workers, prune=prune)
    combine_value(grid, proj, penalty_alt, penalty_scale)
    grid.best_action = np.array([select_action(r) for r in grid.v_star], dtype=np.int64)
    return grid


def dump_grid(grid: ValuationGrid, path: str | Path) -> None:
    """Write a grid for inspection; ``.json`` gives nested lists, else long CSV."""
    path = Path(path)
    if path.suffix == ".json":
        payload = {
            name: None if getattr(grid, name) is None else getattr(grid, name).tolist()
            for name in ("v_pos", "v_neg", "v_terrain", "v_intruder", "v", "v_star", "best_action")
        }
        path.write_text(json.dumps(payload))
        return
    n, a, w = grid.shape
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["aircraft", "action", "step", "v_pos", "v_neg", "v_terrain", "v_intruder", "v"])
        for i in range(n):
            for j in range(a):
                for k in range(w):
                    out.writerow(
                        [
                            i,
                            j,
                            k + 1,
                            repr(float(grid.v_pos[i, j, k])),
                            repr(float(grid.v_neg[i, j, k])),
                            repr(float(grid.v_terrain[i, j, k])),
                            repr(float(grid.v_intruder[i, j, k])),
                            "" if grid.v is None else repr(float(grid.v[i, j, k])),
                        ]
                    )
