"""
Untreated infection over 30 days
================================

Forward RK4 run of the 11-compartment model with no drugs, under both
parameter presets.
"""

import numpy as np

from lepra_oc import build_scenario, integrate_forward, summarize
from lepra_oc.integrate import IntegrationError

sc = build_scenario("no-drug-30")
traj = integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
s = summarize(traj)

# time-average and day-30 value of every compartment
for name in traj.names:
    print(f"{name:>4}  mean {s.mean[name]:12.4f}   day 30 {s.final[name]:12.4f}")

# the cytokine equations are not positivity preserving at these rates
neg = {n: float(traj.column(n).min()) for n in traj.names if traj.column(n).min() < 0}
print("compartments that go negative:", neg)

# the table preset (beta = 3.44) blows up within a few days
try:
    t2 = build_scenario("no-drug-30", params_preset="table")
    integrate_forward(t2.x0_array(), t2.initial_controls(), t2.resolved_params())
except IntegrationError as exc:
    print("table preset:", exc)

np.set_printoptions(precision=3, suppress=True)
print("state at day 10:", traj.at(10.0))
