"""
A single flight in empty airspace
=================================

Fly one aircraft 2 km east around a terrain obstacle and export the track.
"""

import math

import numpy as np

from fastmdp.domain import AircraftState, Scenario
from fastmdp.peaks import terrain_peak
from fastmdp.simulation import simulate_batch, write_trajectory_csv

# A hill sits right on the direct route; its core is half the well radius.
scn = Scenario(terrain_peaks=(terrain_peak((1000, 0, 250), 300.0),))
start = AircraftState((0, 0, 300), heading=0.0, speed=scn.cruise_speed)
out = simulate_batch([start], [(2000, 0, 300)], None, scn, aircraft_ids=["DEMO1"])

plan = out.trajectories[0]
pos = plan.positions
print("status          :", out.statuses[0].value)
print("flight time     :", round(plan.end_clock - plan.start_clock, 1), "s")
print("closest to hill :", round(float(np.linalg.norm(pos - [1000, 0, 250], axis=1).min()), 1), "m")
print("max lateral     :", round(float(np.abs(pos[:, 1]).max()), 1), "m")
print("path length     :", round(float(np.linalg.norm(np.diff(pos, axis=0), axis=1).sum()), 1), "m")
print("end heading     :", round(math.degrees(plan.rows[-1, 4]), 1), "deg")

write_trajectory_csv([plan], "single_flight.csv")
print("wrote single_flight.csv")
