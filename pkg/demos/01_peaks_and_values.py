"""
Peaks, risk wells and action values
===================================

Build the peaks seen by one aircraft, project every candidate action one
second ahead and look at how the value of each action is assembled.
"""

import numpy as np

from fastmdp.domain import AircraftState, Scenario
from fastmdp.dynamics import forward_project
from fastmdp.peaks import build_goal_peak, build_step_peaks, build_traffic_peaks
from fastmdp.valuation import evaluate, positive_value, well_value

# A goal 1 km away still has a noticeable pull; a well 100 m away is already weak.
goal = build_goal_peak((0, 0, 0))
well = build_traffic_peaks((0, 0, 0), (0, 0, 0))[1]
print("goal value at 1 km :", round(positive_value((1000, 0, 0), goal), 2))
print("well value at 100 m:", round(well_value((100, 0, 0), well), 2))
print("well value at 300 m:", well_value((300, 0, 0), well), "(edge of the well)")

# One intruder crossing right to left in front of us generates five wells
# along its track, growing from 250 m behind it to 450 m ahead of it.
for p in build_traffic_peaks((400, -100, 300), (0, 15, 0)):
    print("well at", np.round(p.position, 1), "radius", p.radius)

# Project all 1350 default actions and score them.
scn = Scenario()
me = AircraftState((0, 0, 300), heading=0.0, speed=scn.cruise_speed)
peaks = build_step_peaks([me], [(2000, 0, 300)], (np.array([[400.0, -100, 300]]), np.array([[0.0, 15, 0]])), [])
proj = forward_project([me], scn.actions, scn.limits, scn.dt, scn.window)
grid = evaluate(proj, peaks, scn.limits.hard_deck_altitude)

best = int(grid.best_action[0])
print("candidate actions :", proj.shape[1])
print("best action       :", scn.actions.action(best))
print("its score         :", round(float(grid.v_star[0, best]), 3))
print("hold-course score :", round(float(grid.v_star[0, scn.actions.hold_index]), 3))
