"""End-to-end acceptance criteria, each printed as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report.
"""

from __future__ import annotations

import math
import time

import mpmath
import numpy as np
import pytest

from fastmdp.bench import bench_batch_scaling, bench_plan_scaling, linear_fit, peak_counts, write_bench_csv
from fastmdp.domain import AircraftState, Peak, PeakKind, Scenario
from fastmdp.dynamics import forward_project
from fastmdp.peaks import PEAKS_PER_AIRCRAFT, build_step_peaks, build_traffic_peaks
from fastmdp.planstore import PlanStore, load_store
from fastmdp.reference import serial_forward_project, serial_valuation
from fastmdp.scheduler import process_request, validate_plan
from fastmdp.simulation import Status, simulate_batch
from fastmdp.valuation import evaluate, positive_value, well_value

from support import brute_min_separation, fast_scenario, fcfs_workload, random_instance, workload_scenario

mpmath.mp.dps = 50


def report(number: int, name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}: {detail}")


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    mismatches = 0
    for trial in range(200):
        limits, actions, states, goals, intruders, terrain = random_instance(rng)
        peaks = build_step_peaks(states, goals, intruders, terrain)
        proj = forward_project(states, actions, limits, 0.1, 10)
        grid = evaluate(proj, peaks, limits.hard_deck_altitude, workers=1 + trial % 3)

        serial = serial_forward_project(states, actions, limits, 0.1, 10)
        pos = np.array([[[s.position for s in roll] for roll in per] for per in serial])
        oracle = serial_valuation(pos, peaks, limits.hard_deck_altitude)
        same = (
            np.array_equal(pos, proj.positions)
            and np.array_equal(oracle["v_star"], grid.v_star)
            and np.array_equal(oracle["best_action"], grid.best_action)
        )
        mismatches += not same
    elapsed = time.perf_counter() - started
    ok = mismatches == 0 and elapsed < 60.0
    report(1, "oracle equivalence", ok, f"{mismatches}/200 mismatches in {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 60.0


def test_criterion_2_formula_spot_checks():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        r = float(rng.uniform(1, 5000)) * (1 if rng.random() < 0.5 else -1)
        # Discounts cover the model range (0.97..0.999) and keep results normal floats.
        g = float(rng.uniform(0.9, 0.9999))
        d = float(rng.uniform(0, 3000))
        # Put the state at distance d along an axis so the distance is exact.
        pos = (d, 0.0, 0.0)
        exact = abs(mpmath.mpf(r)) * mpmath.power(mpmath.mpf(g), mpmath.mpf(d))
        goal = Peak(r, g, (0, 0, 0), math.inf, PeakKind.GOAL)
        well = Peak(r, g, (0, 0, 0), d + 1.0, PeakKind.INTRUDER)
        for got in (positive_value(pos, goal), well_value(pos, well)):
            if exact == 0:
                continue
            worst = max(worst, float(abs((mpmath.mpf(got) - exact) / exact)))
    truncated = all(
        well_value((float(R) + extra, 0.0, 0.0), Peak(1000.0, 0.97, (0, 0, 0), float(R), PeakKind.TERRAIN)) == 0.0
        for R in rng.uniform(1, 1000, size=200)
        for extra in (0.0, 1.0, 1e3)
    )
    ok = worst <= 1e-12 and truncated
    report(2, "formula spot checks", ok, f"max relative error {worst:.2e}, truncation exact zero: {truncated}")
    assert worst <= 1e-12
    assert truncated


def test_criterion_3_peak_construction():
    rng = np.random.default_rng(11)
    table = {-5: 250.0, 0: 300.0, 5: 350.0, 10: 400.0, 15: 450.0}
    bad = 0
    for _ in range(200):
        m = int(rng.integers(0, 12))
        pos = rng.uniform(-5000, 5000, size=(m, 3))
        vel = rng.uniform(-60, 60, size=(m, 3))
        own = AircraftState((0.0, 0.0, 300.0), heading=0.0, speed=20.0)
        [ps] = build_step_peaks([own], [(1000.0, 0.0, 300.0)], (pos, vel), [])
        if ps.intruder_negative.shape != (PEAKS_PER_AIRCRAFT * m, 6):
            bad += 1
            continue
        for j in range(m):
            expected = build_traffic_peaks(pos[j], vel[j])
            for k, (t, radius) in enumerate(table.items()):
                row = ps.intruder_negative[PEAKS_PER_AIRCRAFT * j + k]
                want = [pos[j][c] + vel[j][c] * t for c in range(3)]
                ok_row = (
                    list(row[2:5]) == want
                    and row[5] == radius
                    and row[0] == 1000.0
                    and row[1] == 0.97
                    and expected[k].position == tuple(want)
                    and expected[k].radius == radius
                )
                bad += not ok_row
    report(3, "peak construction", bad == 0, f"{bad} mismatching peaks")
    assert bad == 0


def _run_workload(path, reqs, scenario):
    store = PlanStore(path=path)
    responses = [process_request(r, store, scenario) for r in reqs]
    return store, responses


@pytest.fixture(scope="module")
def workload(tmp_path_factory):
    reqs = fcfs_workload(seed=99)
    scenario = workload_scenario()
    path = tmp_path_factory.mktemp("fcfs") / "store.jsonl"
    store, responses = _run_workload(path, reqs, scenario)
    return reqs, scenario, path, store, responses


def test_criterion_4_conflict_free_guarantee(workload):
    reqs, scenario, path, store, responses = workload
    accepted = [r.plan for r in responses if r.accepted]
    violations = 0
    core = [(np.array(p.position), scenario.terrain_core_ratio * p.radius) for p in scenario.terrain_peaks]
    floor = scenario.limits.hard_deck_altitude - scenario.hard_deck_tolerance
    for k, plan in enumerate(accepted):
        if not validate_plan(plan, accepted[:k], scenario.terrain_array, scenario).passed:
            violations += 1
        for prior in accepted[:k]:
            if brute_min_separation(plan, prior) < scenario.separation_threshold:
                violations += 1
        for r in plan.rows:
            if r[3] < floor or any(math.dist(r[1:4], c) < rc for c, rc in core):
                violations += 1
                break
    reloaded = load_store(path)
    same_file = [p.plan_id for p in reloaded.plans] == [p.plan_id for p in accepted]
    ok = violations == 0 and same_file and len(accepted) > 0
    report(
        4,
        "conflict-free guarantee",
        ok,
        f"{len(accepted)}/{len(reqs)} accepted, {violations} violations",
    )
    assert len(accepted) > 0
    assert same_file
    assert violations == 0


def test_criterion_5_fcfs_determinism(workload, tmp_path):
    reqs, scenario, path, _, _ = workload
    replay = tmp_path / "replay.jsonl"
    _run_workload(replay, reqs, scenario)
    identical = path.read_bytes() == replay.read_bytes()
    report(5, "FCFS determinism", identical, f"store files identical: {identical}")
    assert identical


def test_criterion_6_linear_scaling(tmp_path):
    scenario = fast_scenario()
    counts = [100, 200, 400, 600, 800, 1000]
    records = bench_plan_scaling(counts, scenario, seed=3, steps=60, warmup=20)
    fit = linear_fit(peak_counts(counts), [r.seconds_per_step for r in records])
    write_bench_csv(records, tmp_path / "plans.csv")
    shape = bench_plan_scaling([0, 100, 500, 1000], scenario, seed=3, steps=60, warmup=20)
    hz = [r.hz for r in shape]
    monotone = all(a > b for a, b in zip(hz, hz[1:]))
    ok = fit.r_squared >= 0.9 and monotone
    report(
        6,
        "linear scaling",
        ok,
        f"R^2 = {fit.r_squared:.4f} over {counts[0]}-{counts[-1]} plans; Hz {', '.join(f'{h:.0f}' for h in hz)}",
    )
    assert fit.r_squared >= 0.9
    assert monotone


def test_criterion_7_batch_saturation():
    records = bench_batch_scaling([1, 5, 10, 20], fast_scenario(), intruders=100, seed=5, steps=60, warmup=20)
    totals = [r.total_cycles_hz for r in records]
    arithmetic = all(math.isclose(r.total_cycles_hz, r.param * r.hz) for r in records)
    ok = arithmetic and totals[-1] >= 0.5 * max(totals)
    report(7, "batch saturation", ok, "total_cycles_hz " + ", ".join(f"b={r.param}: {r.total_cycles_hz:.0f}" for r in records))
    assert [r.param for r in records] == [1, 5, 10, 20]
    assert arithmetic
    assert totals[-1] >= 0.5 * max(totals)


def test_criterion_8_simulation_sanity():
    scenario = Scenario()
    start = AircraftState((0.0, 0.0, 300.0), heading=0.0, speed=scenario.cruise_speed)
    goal = (2000.0, 0.0, 300.0)
    out = simulate_batch([start], [goal], None, scenario)
    plan = out.trajectories[0]
    final = plan.positions[-1]
    lim = scenario.limits
    bound = lim.speed_max * scenario.dt + 0.5 * lim.accel_max * scenario.dt**2
    steps = np.linalg.norm(np.diff(plan.positions, axis=0), axis=1)
    ok = (
        out.statuses[0] is Status.REACHED_GOAL
        and out.step_count <= scenario.max_steps
        and math.dist(final, goal) < scenario.goal_capture_radius
        and bool(np.all(steps <= bound))
    )
    report(
        8,
        "simulation sanity",
        ok,
        f"{out.statuses[0].value} after {out.step_count} steps, {math.dist(final, goal):.1f} m from goal, "
        f"max step {steps.max():.3f} m <= {bound:.3f} m",
    )
    assert out.statuses[0] is Status.REACHED_GOAL
    assert out.step_count <= scenario.max_steps
    assert math.dist(final, goal) < scenario.goal_capture_radius
    assert np.all(steps <= bound)
