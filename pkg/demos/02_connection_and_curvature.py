"""
Geometric connection and curvature of the limit cycle
=====================================================

The loop phase of a slowly cycled oscillator is the flux of the curvature
chi through the loop. For Van der Pol in the (mu, omega) plane chi = 1/8w^2;
for Van der Pol-Duffing in the (mu, beta) plane the singular part is
3 beta / (2 mu^2 w^3).
"""
import math

from rgwb.derivation import derive
from rgwb.geometry import connection, curvature, predicted_loop_phase
from rgwb.model import van_der_pol, van_der_pol_duffing
from rgwb.protocol import CycleProtocol

vdp = derive(van_der_pol()).polar.with_loop("mu", "omega")
for omega in (1.0, 2.0, 4.0):
    s = curvature(vdp, {"mu": 0.1, "omega": omega})
    print(f"VdP  w={omega}: a={s.a}, chi={s.chi:.10f}, 1/8w^2={1 / (8 * omega**2):.10f}")

vdpd = derive(van_der_pol_duffing()).polar.with_loop("mu", "beta")
point = {"mu": 0.01, "beta": 0.005, "omega": 1.0}
full = curvature(vdpd, point)
sing = curvature(vdpd, point, singular_only=True)
print(f"\nVdPD full connection     a = {full.a}, chi = {full.chi:.6f}")
print(f"VdPD singular connection a = {sing.a}, chi = {sing.chi:.6f}")
print(f"3 beta / (2 mu^2 w^3)        = {3 * 0.005 / (2 * 0.01**2):.6f}")

# small loops: area times curvature; larger loops: line integral of a
print("\nVdP loop phase, line integral vs area*chi")
for scale in (2.0, 1.0, 0.5):
    loop = CycleProtocol(("mu", "omega"), {"mu": 0.1, "omega": 2.0}, (0.01 * scale, 0.2 * scale), 1e5)
    line = predicted_loop_phase(vdp, loop, mode="line")
    area = predicted_loop_phase(vdp, loop)
    print(f"  radii x{scale}: line {line:.6e}  area {area:.6e}  ratio {line / area:.5f}")

print(f"\nloop center used for the area formula: {loop.center}")
print(f"pi*d1*d2/32 = {math.pi * 0.01 * 0.2 / 32:.6e}")
