"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the summary."""
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from rgwb import golden
from rgwb.derivation import derive, ode_residual
from rgwb.geometry import curvature
from rgwb.model import van_der_pol, van_der_pol_duffing
from rgwb.protocol import CycleProtocol, Schedule
from rgwb.series import FourierSecularSeries, RationalComplex, SeriesTerm, oscillator_operator, solve_particular
from rgwb.simulator import flow_integrate, flow_loop_phase, integrate, run_cycle_pair

VDP_LOOP = CycleProtocol(("mu", "omega"), {"mu": 0.1, "omega": 2.0}, (0.01, 0.2), 1e5)
VDPD_LOOP = CycleProtocol(("mu", "beta"), {"mu": 0.01, "beta": 0.005, "omega": 1.0}, (0.0005, 0.001), 1e5)
VDP_DECADES = (1e3, 1e4, 1e5)  # omega0*T below the plateau point 2e5
VDPD_FAMILY = ((0.015, 0.01125), (0.02, 0.02), (0.025, 0.03125))  # beta / mu^2 = 50


def _jobs():
    vdp, vdpd = van_der_pol(), van_der_pol_duffing()
    jobs = {("vdp", w): (vdp, VDP_LOOP.replace(T=w / 2)) for w in VDP_DECADES + (2e5,)}
    for mu in (0.05, 0.2):
        jobs[("vdp_mu", mu)] = (vdp, VDP_LOOP.replace(base={"mu": mu, "omega": 2.0}))
    jobs[("vdpd", 1e5)] = (vdpd, VDPD_LOOP)
    for mu, beta in VDPD_FAMILY:
        jobs[("vdpd_family", mu)] = (vdpd, VDPD_LOOP.replace(base={"mu": mu, "beta": beta, "omega": 1.0}))
    return jobs


@pytest.fixture(scope="module")
def loops():
    """Every loop measurement the loop-phase criteria need, run concurrently."""
    jobs = _jobs()
    start = time.perf_counter()
    with ThreadPoolExecutor() as pool:
        futures = {k: pool.submit(run_cycle_pair, model, proto) for k, (model, proto) in jobs.items()}
        thetas = {k: f.result().theta for k, f in futures.items()}
    thetas["elapsed"] = time.perf_counter() - start
    return thetas


def _isclose_all(values, rel_tol):
    return all(math.isclose(a, b, rel_tol=rel_tol) for a in values for b in values)


def test_symbolic_golden_suite(acceptance):
    start = time.perf_counter()
    diffs = []
    for name, model in (("vdp", van_der_pol()), ("vdpd", van_der_pol_duffing())):
        d = derive(model)
        diffs += golden.compare(name, d)
    vdp = derive(van_der_pol())
    quintic = SeriesTerm(RationalComplex(-5) / 192, -2, 0, 5, (5, 0), (("mu", 2),))
    has_quintic = vdp.solution.coefficient(quintic.key) == quintic.coeff
    mixed = derive(van_der_pol_duffing()).flow.entry((("beta", 1), ("mu", 1))).to_text()
    elapsed = time.perf_counter() - start
    ok = not diffs and has_quintic and mixed == "(-1/4)*w^-2*A*|A|^2*(3-2|A|^2)" and elapsed < 1.0
    acceptance("symbolic golden suite", ok, f"{len(diffs)} differences, {elapsed:.2f} s")


def test_particular_solution_property_suite(acceptance):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    failures = 0
    for _ in range(200):
        re, im = (RationalComplex(int(rng.integers(-50, 51))) / int(rng.integers(1, 13)) for _ in range(2))
        coeff = re + im * RationalComplex(0, 1)
        if not coeff:
            coeff = RationalComplex(1)
        m, l = int(rng.integers(-7, 8)), int(rng.integers(0, 5))
        term = SeriesTerm(coeff, int(rng.integers(-3, 3)), l, m,
                          (int(rng.integers(0, 5)), int(rng.integers(0, 5))))
        sol = solve_particular(term)
        degrees = [t.t_pow for t in sol.terms]
        if abs(m) == 1:
            law = max(degrees) == l + 1 and min(degrees) >= 1
        else:
            law = max(degrees) == l
        if oscillator_operator(sol) != FourierSecularSeries.from_terms([term]) or not law:
            failures += 1
    elapsed = time.perf_counter() - start
    acceptance("particular-solution property suite", failures == 0 and elapsed < 1.0,
               f"{failures}/200 failures, {elapsed:.2f} s")


def test_geometry(acceptance):
    start = time.perf_counter()
    chi_vdp = curvature(derive(van_der_pol()).polar.with_loop("mu", "omega"), {"mu": 0.1, "omega": 2.0}).chi
    chi_vdpd = curvature(derive(van_der_pol_duffing()).polar.with_loop("mu", "beta"),
                         {"mu": 0.01, "beta": 0.005, "omega": 1.0}, singular_only=True).chi
    elapsed = time.perf_counter() - start
    ok = (abs(chi_vdp / 0.03125 - 1) <= 1e-6 and abs(chi_vdpd / 75 - 1) <= 1e-4 and elapsed < 1.0)
    acceptance("geometry", ok, f"chi_vdp={chi_vdp:.10g}, chi_vdpd(singular)={chi_vdpd:.8g}, {elapsed:.2f} s")


def test_vdp_loop_phase(acceptance, loops):
    theta = loops[("vdp", 2e5)]
    plateau_err = [abs(loops[("vdp", w)] - theta) for w in VDP_DECADES]
    monotone = all(b <= a for a, b in zip(plateau_err, plateau_err[1:]))
    near = all(abs(loops[("vdp", w)] / theta - 1) <= 0.05 for w in VDP_DECADES if w >= 1e4)
    family = [loops[("vdp_mu", 0.05)], theta, loops[("vdp_mu", 0.2)]]
    ok = abs(theta / 1.98e-4 - 1) <= 0.10 and monotone and near and _isclose_all(family, 0.15)
    detail = (f"theta(2e5)={theta:.5g}, |theta-plateau| at 1e3/1e4/1e5 = "
              + "/".join(f"{e:.2g}" for e in plateau_err)
              + ", mu=0.05/0.1/0.2: " + "/".join(f"{v:.5g}" for v in family))
    acceptance("VdP loop phase", ok, detail)


def test_vdpd_loop_phase(acceptance, loops):
    theta = loops[("vdpd", 1e5)]
    family = [loops[("vdpd_family", mu)] for mu, _ in VDPD_FAMILY]
    spread = max(family) / min(family) - 1
    ok = abs(theta / 1.31e-4 - 1) <= 0.10 and _isclose_all(family, 0.15)
    acceptance("VdPD loop phase", ok,
               f"theta(1e5)={theta:.5g}, beta/mu^2=50 family: " + "/".join(f"{v:.5g}" for v in family)
               + f" (max/min-1={spread:.2%}, largest |a-b|/max(|a|,|b|)="
               + f"{(max(family) - min(family)) / max(family):.2%})")


def test_flow_vs_simulation(acceptance, loops):
    parts = []
    ok = True
    for model, proto, key in ((van_der_pol(), VDP_LOOP, ("vdp", 2e5)), (van_der_pol_duffing(), VDPD_LOOP, ("vdpd", 1e5))):
        flow = flow_loop_phase(derive(model).polar, proto)
        sim = loops[key]
        rel = abs(flow - sim) / abs(sim)
        ok &= rel <= 0.05
        parts.append(f"{model.name}: flow={flow:.5g} sim={sim:.5g} ({rel:.2%})")
    acceptance("RG flow vs direct simulation", ok, "; ".join(parts))


def test_residual_scaling(acceptance):
    d = derive(van_der_pol())
    flow = d.flow.without_rates()

    def worst(mu):
        values = {"mu": mu, "omega": 2.0}

        def rhs(t, u):
            a = flow(u[0] + 1j * u[1], values).item()
            return [a.real, a.imag]

        # slow-time window mu*t in [0, 2] from |A| = 1/2 toward the cycle
        sol = solve_ivp(rhs, (0, 2 / mu), [0.5, 0.0], method="DOP853", rtol=1e-13, atol=1e-15,
                        dense_output=True)
        t = np.linspace(0, 2 / mu, 2000)
        z = sol.sol(t)
        return np.max(np.abs(ode_residual(d, values, t, z[0] + 1j * z[1])))

    mus = np.array([0.02, 0.04, 0.08, 0.16])
    slope = np.polyfit(np.log(mus), np.log([worst(mu) for mu in mus]), 1)[0]
    acceptance("residual scaling", abs(slope - 3) <= 0.2, f"log-log slope {slope:.4f} (expected 3)")


def test_adiabatic_invariant(acceptance):
    w0, w1 = 2.0, 3.0
    t0, duration = 50.0, 1e4 / w0
    sched = Schedule.ramp({"mu": 0.0, "omega": w0}, "omega", w1, t0, duration)
    end = t0 + duration + 50.0
    sys = derive(van_der_pol(mu=0.0)).polar
    traj = flow_integrate(sys, sched, (0.0, end), r0=2.0)
    omega = sched.values(traj.t)["omega"]
    invariant = traj.r ** 2 * omega
    flow_drift = np.max(np.abs(invariant / invariant[0] - 1))

    sim = integrate(van_der_pol(mu=0.0), sched, (0.0, end), tol=1e-12)
    w = sched.values(sim.t)["omega"]
    ratio = 0.5 * (sim.state[:, 1] ** 2 + w ** 2 * sim.state[:, 0] ** 2) / w
    sim_drift = np.max(np.abs(ratio / ratio[0] - 1))
    ok = flow_drift <= 1e-10 and sim_drift < 0.01
    acceptance("adiabatic invariant", ok, f"flow |A|^2 w drift {flow_drift:.2e}, simulated E/w drift {sim_drift:.2e}")
