"""
First-come-first-served planning
================================

Requests arrive one at a time. Each one is flown against every plan accepted
so far, then certified by a geometric check before it is stored.
"""

import numpy as np

from fastmdp.domain import Scenario
from fastmdp.planstore import PlanStore
from fastmdp.scheduler import PlanRequest, process_batch, process_request

# A smaller action grid keeps the demo quick.
scn = Scenario(action_counts=(7, 4, 5))
store = PlanStore()

requests = [
    PlanRequest("EAST", (0, 0, 300), (1500, 0, 300)),
    PlanRequest("WEST", (1500, 0, 300), (0, 0, 300)),  # head-on with EAST
    PlanRequest("TWIN", (0, 0, 300), (1500, 0, 300)),  # same place, same time: no way out
    PlanRequest("LATE", (0, 0, 300), (1500, 0, 300), requested_departure=10.0),
]
for req in requests:
    r = process_request(req, store, scn)
    sep = "-" if np.isinf(r.min_separation) else f"{r.min_separation:.0f} m"
    reason = r.rejection_reason.value if r.rejection_reason else ""
    print(f"{req.aircraft_id:5s} {r.status.value:9s} {reason:16s} closest approach {sep}")

# Batches are co-simulated: members see each other as well as the store.
batch = [
    PlanRequest("N1", (750, -800, 300), (750, 800, 300), 60.0),
    PlanRequest("E1", (0, 300, 300), (1500, 300, 300), 60.0),
]
for r in process_batch(batch, store, scn):
    print(f"{r.request.aircraft_id:5s} {r.status.value}")
print("plans in store:", [p.plan_id for p in store.plans])
