"""
Measuring the loop phase by direct simulation
=============================================

Run the Van der Pol loop counterclockwise and clockwise, compare the times
of the same zero crossing afterwards, and watch the phase settle onto the
geometric prediction as the loop gets slower. Pass --full for the long
loops (a few minutes); the default stops at omega0*T = 4e4.
"""
import sys

from rgwb.cli import load_protocol
from rgwb.derivation import derive
from rgwb.geometry import predicted_loop_phase
from rgwb.model import van_der_pol
from rgwb.simulator import flow_loop_phase, sweep_csv, sweep_T

model = van_der_pol()
proto = load_protocol("vdp_loop")
sys_ = derive(model).polar.with_loop(*proto.loop)

pred = predicted_loop_phase(sys_, proto)
print(f"area*chi prediction: {pred:.6e}")
print(f"RG flow at T={proto.T:g}: {flow_loop_phase(sys_, proto):.6e}\n")

omega0T = [1e3, 4e3, 1e4, 4e4]
if "--full" in sys.argv:
    omega0T += [1e5, 2e5, 4e5]
results = sweep_T(model, proto, [w / proto.omega0 for w in omega0T], predicted=pred)
print(sweep_csv(results))

# short loops are not adiabatic: the relative error drops as T grows
for r in results:
    print(f"omega0*T = {r.measurement.omega0T:8.0f}   theta = {r.measurement.theta:.5e}   rel. err {r.rel_err:.3f}")
