from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from rgwb import golden
from rgwb.derivation import (
    AmplitudeFlow,
    ConstructionError,
    derive,
    expand,
    extract_flow,
    frequency_rate_flow,
    group_law_defect,
    nonadiabatic_eps,
    nonadiabatic_omega,
    ode_residual,
    polar_form,
    render_solution,
)
from rgwb.geometry import limit_cycle_radius
from rgwb.model import ModelError, parse_model, van_der_pol, van_der_pol_duffing
from rgwb.series import FourierSecularSeries, RationalComplex, SeriesTerm


@pytest.fixture(scope="module")
def vdp():
    return derive(van_der_pol())


@pytest.fixture(scope="module")
def vdpd():
    return derive(van_der_pol_duffing())


def test_vdp_series_matches_table(vdp):
    assert vdp.solution == golden.series(golden.VDP_SERIES)


def test_vdpd_series_matches_table(vdpd):
    assert vdpd.solution == golden.series(golden.VDPD_SERIES)


@pytest.mark.parametrize("name", ["vdp", "vdpd"])
def test_golden_compare_is_clean(name, vdp, vdpd):
    assert golden.compare(name, {"vdp": vdp, "vdpd": vdpd}[name]) == []


def test_golden_compare_reports_differences(vdp):
    other = derive(van_der_pol_duffing())
    assert golden.compare("vdp", other)


def test_vdp_flow(vdp):
    assert vdp.flow == golden.flow(golden.VDP_FLOW)
    assert vdp.flow.entry((("mu", 2),)).to_text() == "(-i/16)*w^-1*A*(2-8|A|^2+7|A|^4)"


def test_vdpd_flow(vdpd):
    assert vdpd.flow == golden.flow(golden.VDPD_FLOW)
    mixed = vdpd.flow.entry((("beta", 1), ("mu", 1)))
    assert mixed.to_text() == "(-1/4)*w^-2*A*|A|^2*(3-2|A|^2)"


def test_rate_terms_agree_with_expansion_in_the_rates():
    # solving the epsdot order directly gives the same flow and rendered solution
    model = van_der_pol_duffing()
    direct = expand(model, rates=True)
    shortcut = derive(model)
    assert extract_flow(direct) == shortcut.flow
    assert render_solution(direct, shortcut.flow).series == shortcut.renormalized.series


def test_frequency_rate_term():
    flow = frequency_rate_flow()
    assert flow.to_text() == "dA/dt = (-1/2)*omegadot*w^-1*A"


def test_vdp_omega_iteration_flag():
    plain = parse_model(van_der_pol().to_text().replace("vdp_omega_iteration = true", ""))
    d = derive(plain)
    assert not d.flow.entry((("mu", 1),), (("omega", 1),))
    assert derive(van_der_pol()).flow.entry((("mu", 1),), (("omega", 1),))


def test_nonadiabatic_omega_requires_flag():
    model = van_der_pol_duffing()
    with pytest.raises(ModelError):
        nonadiabatic_omega(extract_flow(expand(model)), model)


def test_iteration_requires_pure_vdp():
    text = van_der_pol_duffing().to_text().replace("omega = 1.0", "omega = 1.0 [time_dependent]")
    model = parse_model(text + "vdp_omega_iteration = true\n")
    with pytest.raises(ModelError):
        derive(model)


def test_polar_tables(vdp, vdpd):
    assert golden._norm_polar(vdp.polar.f_parts) == golden._norm_polar(golden.VDP_POLAR_F)
    assert golden._norm_polar(vdpd.polar.Omega_parts) == golden._norm_polar(golden.VDPD_POLAR_OMEGA)


def test_cycle_radius_frequency_shift_and_stability(vdp):
    values = {"mu": 0.1, "omega": 2.0}
    R = limit_cycle_radius(vdp.polar, values)
    assert R == pytest.approx(2.0, abs=1e-13)
    rdot, thdot = vdp.polar(R, values)
    assert rdot == pytest.approx(0.0, abs=1e-15)
    assert thdot == pytest.approx(-0.1 ** 2 / (16 * 2.0), rel=1e-12)
    h = 1e-6
    slope = (vdp.polar(R + h, values)[0] - vdp.polar(R - h, values)[0]) / (2 * h)
    assert slope == pytest.approx(-0.1, rel=1e-8)


def test_polar_form_rejects_non_covariant_flow():
    bad = AmplitudeFlow(FourierSecularSeries.from_terms([SeriesTerm(RationalComplex(1), amp_pows=(2, 0))]))
    with pytest.raises(ConstructionError):
        polar_form(bad)


def test_flows_are_covariant(vdp, vdpd):
    assert vdp.flow.is_covariant() and vdpd.flow.is_covariant()


def test_group_law_holds(vdp, vdpd):
    for d in (vdp, vdpd):
        assert not group_law_defect(d.solution, extract_flow(d.solution))


def test_group_law_detects_wrong_flow(vdp):
    wrong = extract_flow(vdp.solution).series.filter(lambda t: t.eps_pows != (("mu", 2),))
    assert group_law_defect(vdp.solution, AmplitudeFlow(wrong))


def test_extract_flow_rejects_regular_prime_terms():
    stray = FourierSecularSeries.from_terms([SeriesTerm(RationalComplex(1), harmonic=1, amp_pows=(2, 1),
                                                        eps_pows=(("mu", 1),))])
    with pytest.raises(ConstructionError):
        extract_flow(stray)


def test_rendered_solution(vdp):
    text = vdp.renormalized.to_text()
    assert "(t-t1)" not in text
    assert "(-3/32)*mudot*w^-2*A^3*e^{3i w t}" in text
    assert "(-5/192)*mu^2*w^-2*A^5*e^{5i w t}" in text
    y = vdp.renormalized(0.0, 1.0, {"mu": 0.0, "omega": 2.0})
    assert y == pytest.approx(2.0)


def test_nonadiabatic_eps_term(vdpd):
    first = vdpd.flow.entry((("mu", 1),))
    rate = vdpd.flow.entry((), (("mu", 1),))
    assert rate == first.scale(RationalComplex(0, Fraction(1, 2)), omega_pow=-1)


def test_adiabatic_invariant_is_exact():
    # with mu = 0, d(r^2 w)/dt = 2 r w f + r^2 wdot = 0 for any wdot
    sys = derive(van_der_pol(mu=0.0)).polar
    for r, w, wdot in ((1.0, 2.0, 0.3), (2.5, 3.0, -1e-3)):
        rdot, _ = sys(r, {"mu": 0.0, "omega": w}, {"omega": wdot})
        assert 2 * r * w * rdot + r * r * wdot == pytest.approx(0.0, abs=1e-15)


def test_residual_is_small_and_shrinks(vdp):
    def worst(mu):
        values = {"mu": mu, "omega": 2.0}
        flow = vdp.flow.without_rates()
        rhs = lambda t, u: (lambda a: [a.real, a.imag])(flow(u[0] + 1j * u[1], values).item())
        sol = solve_ivp(rhs, (0, 2 / mu), [0.5, 0.0], rtol=1e-12, atol=1e-14, dense_output=True)
        t = np.linspace(0, 2 / mu, 400)
        A = sol.sol(t)[0] + 1j * sol.sol(t)[1]
        return np.max(np.abs(ode_residual(vdp, values, t, A)))
    assert worst(0.05) < worst(0.1) / 4
