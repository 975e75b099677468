"""
Adiabatic invariant of a harmonic oscillator
============================================

Setting mu = 0 in the flow below leaves the single rate term -wdot/2w A,
which makes |A|^2 w an exact invariant of the amplitude flow. The direct
simulation conserves E/w up to the small non-adiabatic ripple.
"""
import numpy as np

from rgwb.derivation import derive
from rgwb.model import van_der_pol
from rgwb.protocol import Schedule
from rgwb.simulator import flow_integrate, integrate

model = van_der_pol(mu=0.0)
d = derive(model)
print(d.flow)

# omega: 2 -> 3 over omega0*T = 1e4
sched = Schedule.ramp({"mu": 0.0, "omega": 2.0}, "omega", 3.0, t0=50.0, duration=5e3)
t_end = 5100.0

flow = flow_integrate(d.polar, sched, (0.0, t_end), r0=2.0)
w = sched.values(flow.t)["omega"]
J = flow.r**2 * w
print(f"flow: r from {flow.r[0]:.6f} to {flow.r[-1]:.6f}, max |J/J0 - 1| = {np.max(np.abs(J / J[0] - 1)):.2e}")
print(f"      expected final r = 2*sqrt(2/3) = {2 * np.sqrt(2 / 3):.6f}")

sim = integrate(model, sched, (0.0, t_end), tol=1e-12)
w = sched.values(sim.t)["omega"]
E = 0.5 * (sim.state[:, 1] ** 2 + w**2 * sim.state[:, 0] ** 2)
print(f"simulation: E grows by {E[-1] / E[0]:.6f}, E/w drifts by at most {np.max(np.abs(E / w / (E[0] / w[0]) - 1)):.2e}")
