"""
From perturbation series to amplitude equations
===============================================

Expand the Van der Pol oscillator to second order in mu, read the
amplitude flow off the secular terms and look at the limit cycle it predicts.
"""
from rgwb.derivation import derive
from rgwb.geometry import limit_cycle_radius
from rgwb.model import van_der_pol
from rgwb.series import format_series

model = van_der_pol()
print(model.to_text())

d = derive(model)

# the naive series, order by order; (t-t1) marks the secular pieces
for eps, epsdot in d.solution.orders():
    label = "*".join(f"{k}^{n}" if n > 1 else k for k, n in eps) or "1"
    print(f"[{label}]  y = {format_series(d.solution.order(eps, epsdot))}")

# slope of the linear secular term at the prime harmonic = dA/dt
print()
print(d.flow)

# A = r e^{i theta} / 2
print(d.polar)

values = {"mu": 0.1, "omega": 2.0}
R = limit_cycle_radius(d.polar, values)
rdot, thdot = d.polar(R, values)
print(f"\ncycle radius R = {R:.12f}, frequency shift on the cycle = {thdot:.6e}"
      f" (-mu^2/16w = {-0.1**2 / 32:.6e})")

# secular terms gone, rate corrections in
print()
print(d.renormalized.to_text())
