from __future__ import annotations

import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastmdp.domain import ActionSet, AircraftLimits, AircraftState, Peak, PeakKind
from fastmdp.dynamics import ProjectionTable, forward_project
from fastmdp.peaks import PeakSets, build_step_peaks, terrain_peak
from fastmdp.reference import serial_valuation
from fastmdp.valuation import (
    ValuationGrid,
    accumulate_contributions,
    combine_value,
    dump_grid,
    evaluate,
    hard_deck_penalty,
    peak_field,
    positive_value,
    prune_wells,
    select_action,
    well_value,
)

from support import random_instance

mpmath.mp.dps = 40
GOAL = Peak(200.0, 0.999, (0, 0, 0), math.inf, PeakKind.GOAL)
WELL = Peak(1000.0, 0.97, (0, 0, 0), 300.0, PeakKind.INTRUDER)


def hp(r, g, d):
    return float(mpmath.mpf(r) * mpmath.power(mpmath.mpf(g), mpmath.mpf(d)))


def test_positive_value_examples():
    assert positive_value((0, 0, 0), GOAL) == 200.0
    v = positive_value((1000, 0, 0), GOAL)
    assert v == pytest.approx(hp(200, 0.999, 1000), rel=1e-13)
    assert round(v, 2) == 73.54


def test_positive_value_uses_euclidean_distance():
    # 3-4-12 triangle: distance 13
    assert positive_value((3, 4, 12), GOAL) == pytest.approx(hp(200, 0.999, 13), rel=1e-13)


@given(d1=st.floats(0, 5000), d2=st.floats(0, 5000))
def test_positive_value_decreases_with_distance(d1, d2):
    lo, hi = sorted((d1, d2))
    assert positive_value((lo, 0, 0), GOAL) >= positive_value((hi, 0, 0), GOAL)


def test_well_value_examples():
    assert well_value((0, 0, 0), WELL) == 1000.0
    assert well_value((300, 0, 0), WELL) == 0.0
    assert well_value((math.nextafter(300, 0), 0, 0), WELL) > 0.0
    v = well_value((100, 0, 0), WELL)
    assert v == pytest.approx(hp(1000, 0.97, 100), rel=1e-13)
    assert round(v, 2) == 47.55


@pytest.mark.parametrize(
    "altitude, penalty_alt, expected",
    [(900.0, 1000.0, 100.0), (1200.0, 1000.0, 0.0), (1000.0, 1000.0, 0.0), (1500.0, 2000.0, 0.0), (50.0, 100.0, 950.0)],
)
def test_hard_deck_penalty(altitude, penalty_alt, expected):
    assert hard_deck_penalty(altitude, penalty_alt) == expected


def test_select_action():
    assert select_action([1.0, 5.0, 3.0]) == 1
    assert select_action([2.0, 2.0, 2.0]) == 0
    assert select_action([-3.0, -1.0, -1.0]) == 1
    with pytest.raises(ValueError):
        select_action([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.randoms())
def test_select_action_ignores_permutation_of_non_maxima(row, rnd):
    best = select_action(row)
    others = [i for i in range(len(row)) if i != best]
    vals = [row[i] for i in others]
    rnd.shuffle(vals)
    permuted = list(row)
    for i, v in zip(others, vals):
        permuted[i] = v
    # lowest-index tie rule can move to an earlier equal maximum; otherwise unchanged
    assert permuted[select_action(permuted)] == row[best]
    if row.count(row[best]) == 1:
        assert select_action(permuted) == best


def _table(points: np.ndarray) -> ProjectionTable:
    states = np.zeros(points.shape[:3] + (12,))
    states[..., 0:3] = points
    return ProjectionTable(states)


def _sets(pos=(), neg=(), terrain=(), intr=()) -> list[PeakSets]:
    def arr(peaks):
        return np.array([p.as_row() for p in peaks]).reshape(-1, 6)

    return [PeakSets(arr(pos), arr(neg), arr(intr), arr(terrain))]


def test_single_goal_fills_positive_field():
    pts = np.array([[[[0, 0, 0], [10, 0, 0]], [[0, 50, 0], [0, 0, 70]]]], dtype=float)
    grid = accumulate_contributions(_table(pts), _sets(pos=[GOAL]))
    for a in range(2):
        for t in range(2):
            assert grid.v_pos[0, a, t] == positive_value(pts[0, a, t], GOAL)
    assert not grid.v_neg.any() and not grid.v_terrain.any() and not grid.v_intruder.any()


def test_overlapping_terrain_wells_take_the_larger():
    near = terrain_peak((0, 0, 0), 500.0)
    far = terrain_peak((100, 0, 0), 500.0, 5000.0)
    pts = np.array([[[[20, 0, 0]]]], dtype=float)
    grid = accumulate_contributions(_table(pts), _sets(terrain=[near, far]))
    expected = max(well_value((20, 0, 0), near), well_value((20, 0, 0), far))
    assert grid.v_terrain[0, 0, 0] == expected


def test_combine_value_arithmetic():
    shape = (1, 1, 1)
    grid = ValuationGrid(
        np.full(shape, 73.5), np.zeros(shape), np.full(shape, 47.6), np.full(shape, 10.0)
    )
    table = _table(np.array([[[[0, 0, 5000.0]]]]))
    combine_value(grid, table, penalty_alt=100.0)
    assert grid.v_star[0, 0] == pytest.approx(25.9)
    zero = ValuationGrid(*(np.zeros(shape) for _ in range(4)))
    combine_value(zero, table, penalty_alt=100.0)
    assert zero.v_star[0, 0] == 0.0


def test_combine_value_applies_deck_penalty_on_projected_altitude():
    shape = (1, 1, 2)
    grid = ValuationGrid(*(np.zeros(shape) for _ in range(4)))
    table = _table(np.array([[[[0, 0, 50.0], [0, 0, 150.0]]]]))
    combine_value(grid, table, penalty_alt=100.0)
    assert list(grid.v[0, 0]) == [-950.0, 0.0]
    assert grid.v_star[0, 0] == 0.0


def test_v_star_may_be_negative():
    pts = np.array([[[[0, 0, 300.0]]]])
    far_goal = Peak(200, 0.999, (5000, 0, 300), math.inf, PeakKind.GOAL)
    close_well = Peak(1000, 0.97, (0, 0, 300), 300, PeakKind.INTRUDER)
    grid = evaluate(_table(pts), _sets(pos=[far_goal], intr=[close_well]), 100.0)
    assert grid.v_star[0, 0] < 0


def test_random_instance_matches_serial_oracle_exactly():
    """N=1, A=20, W=10, seven intruders."""
    rng = np.random.default_rng(5)
    lim = AircraftLimits()
    acts = ActionSet.uniform(lim, (5, 2, 2))
    s = [AircraftState((0, 0, 300), 0.3, 20.0)]
    intr = (rng.uniform(-300, 300, size=(7, 3)) + [0, 0, 300], rng.uniform(-20, 20, size=(7, 3)))
    peaks = build_step_peaks(s, [(2000, 0, 300)], intr, [])
    proj = forward_project(s, acts, lim, 0.1, 10)
    grid = evaluate(proj, peaks, lim.hard_deck_altitude)
    oracle = serial_valuation(proj.positions, peaks, lim.hard_deck_altitude)
    for name in ("v_pos", "v_neg", "v_terrain", "v_intruder", "v", "v_star", "best_action"):
        assert np.array_equal(getattr(grid, name), oracle[name]), name


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), workers=st.integers(1, 4), block=st.sampled_from([1, 7, 64, 1 << 18]))
def test_worker_count_and_block_size_do_not_change_results(seed, workers, block):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-500, 500, size=(200, 3))
    rows = np.column_stack(
        [
            rng.uniform(1, 2000, 50),
            rng.uniform(0.9, 0.999, 50),
            rng.uniform(-600, 600, size=(50, 3)),
            rng.uniform(50, 600, 50),
        ]
    )
    base = peak_field(pts, rows, True)
    assert np.array_equal(base, peak_field(pts, rows, True, workers=workers, block_elements=block))
    assert np.array_equal(base, peak_field(pts, rows[::-1], True, workers=workers, block_elements=block))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pipeline_is_deterministic_across_workers_and_pruning(seed):
    limits, actions, states, goals, intruders, terrain = random_instance(np.random.default_rng(seed))
    peaks = build_step_peaks(states, goals, intruders, terrain)
    proj = forward_project(states, actions, limits, 0.1, 10)
    ref = evaluate(proj, peaks, limits.hard_deck_altitude, workers=1, prune=False)
    for workers, prune in ((3, False), (1, True), (4, True)):
        got = evaluate(proj, peaks, limits.hard_deck_altitude, workers=workers, prune=prune)
        assert np.array_equal(ref.v_star, got.v_star)
        assert np.array_equal(ref.best_action, got.best_action)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), gap=st.floats(0, 1000))
def test_out_of_range_well_changes_nothing(seed, gap):
    limits, actions, states, goals, intruders, terrain = random_instance(np.random.default_rng(seed))
    proj = forward_project(states, actions, limits, 0.1, 10)
    peaks = build_step_peaks(states, goals, intruders, terrain)
    ref = evaluate(proj, peaks, limits.hard_deck_altitude)
    pos = proj.positions.reshape(-1, 3)
    centre = pos.max(axis=0) + 500.0
    radius = float(np.linalg.norm(pos - centre, axis=1).min()) - gap
    if radius <= 0:
        return
    extra = np.array([[1000.0, 0.99, *centre, radius]])
    bigger = [
        PeakSets(p.positive, p.batch_negative, p.intruder_negative, np.vstack([p.terrain_negative, extra]))
        for p in peaks
    ]
    for prune in (True, False):
        got = evaluate(proj, bigger, limits.hard_deck_altitude, prune=prune)
        assert np.array_equal(ref.v_star, got.v_star)
        assert np.array_equal(ref.best_action, got.best_action)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1.0, 50.0))
def test_scaling_goal_reward_never_lowers_value(seed, scale):
    limits, actions, states, goals, intruders, terrain = random_instance(np.random.default_rng(seed))
    proj = forward_project(states, actions, limits, 0.1, 10)
    peaks = build_step_peaks(states, goals, intruders, terrain)
    ref = evaluate(proj, peaks, limits.hard_deck_altitude)
    boosted = []
    for p in peaks:
        pos = p.positive.copy()
        pos[:, 0] *= scale
        boosted.append(PeakSets(pos, p.batch_negative, p.intruder_negative, p.terrain_negative))
    got = evaluate(proj, boosted, limits.hard_deck_altitude)
    assert np.all(got.v_star >= ref.v_star)
    for name in ("v_pos", "v_neg", "v_terrain", "v_intruder"):
        assert np.all(getattr(got, name) >= 0.0)


def test_prune_keeps_reachable_wells():
    rows = np.array([[1, 0.9, 0, 0, 0, 10.0], [1, 0.9, 100, 0, 0, 10.0], [1, 0.9, 15, 0, 0, 10.0]])
    kept = prune_wells(rows, np.array([-5.0, -5, -5]), np.array([5.0, 5, 5]))
    assert kept[:, 2].tolist() == [0.0]
    kept = prune_wells(rows, np.array([-5.0, -5, -5]), np.array([6.0, 5, 5]))
    assert kept[:, 2].tolist() == [0.0, 15.0]


def test_mismatched_peak_sets_raise():
    pts = np.zeros((2, 1, 1, 3))
    with pytest.raises(ValueError, match="peak sets"):
        accumulate_contributions(_table(pts), _sets(pos=[GOAL]))


def test_dump_grid(tmp_path):
    pts = np.array([[[[0, 0, 300.0], [10, 0, 300.0]]]])
    grid = evaluate(_table(pts), _sets(pos=[GOAL]), 100.0)
    dump_grid(grid, tmp_path / "g.json")
    data = json.loads((tmp_path / "g.json").read_text())
    assert data["best_action"] == [0] and len(data["v"][0][0]) == 2
    dump_grid(grid, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0].startswith("aircraft,action,step,v_pos") and len(lines) == 3
    assert float(lines[1].split(",")[3]) == grid.v_pos[0, 0, 0]
