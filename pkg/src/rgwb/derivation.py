"""Order-by-order perturbation theory and extraction of the amplitude flow.

The solution is built so that, apart from the bare ``A exp(i w t)`` term, the
prime harmonic only carries secular pieces that vanish at ``t = t1``. The
coefficient of the linear secular piece at each order is then the flow
``dA/dt`` at that order.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import OMEGA, ModelError, ModelSpec
from .polar import PolarRGSystem
from .series import (
    ONE,
    FourierSecularSeries,
    Monomial,
    RationalComplex,
    SeriesTerm,
    bare_amplitude,
    ddt,
    format_monomial,
    mono_degree,
    mono_from,
    mul,
    solve_oscillator,
)

Order = tuple[Monomial, Monomial]


class ConstructionError(RuntimeError):
    """The perturbative solution is not in the expected canonical form."""


def _constant(c=1) -> FourierSecularSeries:
    return FourierSecularSeries.from_terms([SeriesTerm(RationalComplex.coerce(c))])


def _lattice(model: ModelSpec, rates: bool) -> set[Order]:
    orders: set[Order] = {(m, ()) for m in model.orders}
    if rates:
        orders |= {((), ((p.name, 1),)) for p in model.params if p.time_dependent}
    return orders


def _order_degree(order: Order) -> int:
    return mono_degree(order[0]) + mono_degree(order[1])


def _nonlinearity(model, y, ydot, keep) -> dict[str, FourierSecularSeries]:
    """``f_i(y, ydot)`` per parameter, truncated by ``keep``."""
    ypow = {0: _constant()}
    dpow = {0: _constant()}

    def power(cache, base, n):
        if n not in cache:
            cache[n] = mul(power(cache, base, n - 1), base, keep)
        return cache[n]

    out = {}
    for pname, poly in model.nonlinearity.items():
        acc = FourierSecularSeries.empty()
        for (a, b), c in sorted(poly.items()):
            acc = acc + mul(power(ypow, y, a), power(dpow, ydot, b), keep).scale(c)
        out[pname] = acc
    return out


def expand(model: ModelSpec, rates: bool = False) -> FourierSecularSeries:
    """Perturbative solution ``y(t, t1)`` over the model's order lattice.

    With ``rates=True`` each time-dependent parameter ``eps_i`` is replaced by
    ``eps_i + (t - t1) epsdot_i`` on the right-hand side and the
    ``epsdot_i`` order (zeroth order in the parameters themselves) is solved
    as well.
    """
    lattice = _lattice(model, rates)
    inner = {((), ())} | lattice

    def keep(eps, epsdot):
        return (eps, epsdot) in inner

    y = bare_amplitude()
    max_degree = max(_order_degree(o) for o in lattice)
    for degree in range(1, max_degree + 1):
        f = _nonlinearity(model, y, ddt(y), keep)
        rhs = FourierSecularSeries.empty()
        for pname, fi in f.items():
            rhs = rhs + fi.times_monomial(eps=((pname, 1),))
            if rates and model.time_dependent[pname]:
                rhs = rhs + fi.times_monomial(epsdot=((pname, 1),), t_pow=1)
        rhs = rhs.filter(lambda t: (t.eps_pows, t.epsdot_pows) in lattice
                         and _order_degree((t.eps_pows, t.epsdot_pows)) == degree)
        y = y + solve_oscillator(rhs)
    return y


# --------------------------------------------------------------------- flow

@dataclass(frozen=True)
class AmplitudeFlow:
    """``dA/dt`` as an exact series with harmonic 0 and no secular powers.

    Rate terms carry ``epsdot_pows``; the frequency rate is tagged ``omega``.
    """

    series: FourierSecularSeries

    def __post_init__(self):
        for t in self.series.terms:
            if t.harmonic or t.t_pow:
                raise ConstructionError("flow entries must be time independent")

    @classmethod
    def zero(cls) -> AmplitudeFlow:
        return cls(FourierSecularSeries.empty())

    def __add__(self, other: AmplitudeFlow) -> AmplitudeFlow:
        return AmplitudeFlow(self.series + other.series)

    def __eq__(self, other) -> bool:
        return isinstance(other, AmplitudeFlow) and self.series == other.series

    def __hash__(self):
        return hash(self.series)

    def entries(self) -> list[Order]:
        return self.series.orders()

    def entry(self, eps: Monomial = (), epsdot: Monomial = ()) -> FourierSecularSeries:
        return self.series.order(mono_from(eps), mono_from(epsdot))

    def is_covariant(self) -> bool:
        """Every monomial transforms like ``A`` under ``A -> A exp(i alpha)``."""
        return all(t.amp_pows[0] - t.amp_pows[1] == 1 for t in self.series.terms)

    def without_rates(self) -> AmplitudeFlow:
        return AmplitudeFlow(self.series.filter(lambda t: not t.epsdot_pows))

    def __call__(self, A, values: dict[str, float], rates: dict[str, float] | None = None):
        """Numeric ``dA/dt`` for complex ``A`` (scalar or array)."""
        A = np.asarray(A, dtype=complex)
        rates = rates or {}
        out = np.zeros_like(A)
        omega = values[OMEGA]
        for t in self.series.terms:
            w = complex(t.coeff) * omega ** t.omega_pow
            for name, n in t.eps_pows:
                w *= values[name] ** n
            for name, n in t.epsdot_pows:
                w *= rates.get(name, 0.0) ** n
            if w == 0:
                continue
            p, q = t.amp_pows
            out = out + w * A ** p * np.conj(A) ** q
        return out

    def to_text(self) -> str:
        if not self.series:
            return "dA/dt = 0"
        return "dA/dt = " + self.series.to_text()

    def __str__(self) -> str:
        return self.to_text()

    def to_json(self) -> list[dict]:
        out = []
        for (eps, epsdot) in self.entries():
            terms = []
            for t in self.entry(eps, epsdot).terms:
                terms.append({"p": t.amp_pows[0], "q": t.amp_pows[1], "omega_pow": t.omega_pow,
                              "re": str(t.coeff.re), "im": str(t.coeff.im)})
            out.append({"eps": dict(eps), "rates": dict(epsdot), "terms": terms})
        return out


def _is_bare(key) -> bool:
    eps, epsdot, m, l, p, q, k = key
    return not eps and not epsdot and l == 0 and k == 0 and (m, p, q) in ((1, 1, 0), (-1, 0, 1))


def extract_flow(solution: FourierSecularSeries) -> AmplitudeFlow:
    """Read ``F`` off the terms linear in ``(t - t1)`` at the prime harmonic."""
    terms = []
    for key, c in solution.items():
        eps, epsdot, m, l, p, q, k = key
        if abs(m) == 1 and l == 0:
            if _is_bare(key) and c == ONE:
                continue
            raise ConstructionError(
                f"regular prime-frequency term at order {format_monomial(eps) or '1'}: "
                f"{SeriesTerm.from_key(key, c)}"
            )
        if m == 1 and l == 1:
            terms.append(SeriesTerm(c, k, 0, 0, (p, q), eps, epsdot))
    return AmplitudeFlow(FourierSecularSeries.from_terms(terms))


def nonadiabatic_eps(flow: AmplitudeFlow, model: ModelSpec) -> AmplitudeFlow:
    """Add ``epsdot_i * (i / 2w) * F_1^(i)`` for every time-dependent parameter."""
    extra = FourierSecularSeries.empty()
    half_i = RationalComplex(0, Fraction(1, 2))
    for p in model.params:
        if not p.time_dependent:
            continue
        first = flow.entry(((p.name, 1),))
        extra = extra + first.scale(half_i, omega_pow=-1).times_monomial(epsdot=((p.name, 1),))
    return flow + AmplitudeFlow(extra)


def frequency_rate_flow() -> AmplitudeFlow:
    """Flow from ``y'' + w^2 y = -i wdot A exp(i int w) + c.c.``, solved like any other order."""
    tag = ((OMEGA, 1),)
    rhs = FourierSecularSeries.from_terms([
        SeriesTerm(RationalComplex(0, -1), harmonic=1, amp_pows=(1, 0), epsdot_pows=tag),
        SeriesTerm(RationalComplex(0, 1), harmonic=-1, amp_pows=(0, 1), epsdot_pows=tag),
    ])
    return extract_flow(solve_oscillator(rhs))


def vdp_frequency_rate_iteration(param: str) -> AmplitudeFlow:
    """The iterated ``O(eps * wdot)`` Van der Pol term, ``-(i/4w^2) A|A|^2``.

    In polar form it only feeds the phase equation:
    ``dtheta/dt -= eps * wdot * r^2 / (16 w^2)``.
    """
    term = SeriesTerm(RationalComplex(0, Fraction(-1, 4)), -2, 0, 0, (2, 1),
                      ((param, 1),), ((OMEGA, 1),))
    return AmplitudeFlow(FourierSecularSeries.from_terms([term]))


def nonadiabatic_omega(flow: AmplitudeFlow, model: ModelSpec) -> AmplitudeFlow:
    if not model.omega_time_dependent:
        raise ModelError("omega is not flagged [time_dependent]")
    out = flow + frequency_rate_flow()
    if model.vdp_omega_iteration:
        if not model.is_van_der_pol():
            raise ModelError("vdp_omega_iteration requires a pure Van der Pol nonlinearity")
        (param,) = [k for k, v in model.nonlinearity.items() if v]
        out = out + vdp_frequency_rate_iteration(param)
    return out


def polar_form(flow: AmplitudeFlow, loop: tuple[str, str] | None = None) -> PolarRGSystem:
    """Substitute ``A = r exp(i theta) / 2``.

    A monomial ``c A^p conj(A)^q`` with ``p - q = 1`` contributes
    ``Re(2c) (r/2)^(p+q)`` to ``dr/dt`` and ``Im(2c) r^(p+q-1) / 2^(p+q)`` to
    ``dtheta/dt``.
    """
    if not flow.is_covariant():
        raise ConstructionError("flow is not phase-rotation covariant; theta does not decouple")
    radial: dict = {}
    angular: dict = {}
    for t in flow.series.terms:
        p, q = t.amp_pows
        n = p + q
        scale = Fraction(2, 2 ** n)
        order = (t.eps_pows, t.epsdot_pows)
        if t.coeff.re:
            key = (t.omega_pow, n)
            part = radial.setdefault(order, {})
            part[key] = part.get(key, Fraction(0)) + t.coeff.re * scale
        if t.coeff.im:
            key = (t.omega_pow, n - 1)
            part = angular.setdefault(order, {})
            part[key] = part.get(key, Fraction(0)) + t.coeff.im * scale
    return PolarRGSystem(radial, angular, loop)


# --------------------------------------------------------------- rendering

@dataclass(frozen=True)
class RenormalizedSolution:
    """``y_R = A(t) e^{i w t} + regular harmonics + rate corrections + c.c.``"""

    series: FourierSecularSeries
    flow: AmplitudeFlow

    def __call__(self, t, A, values: dict[str, float], rates: dict[str, float] | None = None,
                 phase=None):
        """Evaluate for amplitude samples ``A`` at times ``t``.

        ``phase`` overrides ``w t`` (use ``int w dt`` for a time-dependent frequency).
        """
        t = np.asarray(t, dtype=float)
        A = np.asarray(A, dtype=complex)
        rates = rates or {}
        omega = values[OMEGA]
        phi = omega * t if phase is None else np.asarray(phase, dtype=float)
        out = np.zeros(np.broadcast(t, A).shape, dtype=complex)
        for term in self.series.terms:
            w = complex(term.coeff) * omega ** term.omega_pow
            for name, n in term.eps_pows:
                w *= values[name] ** n
            for name, n in term.epsdot_pows:
                w *= rates.get(name, 0.0) ** n
            if w == 0:
                continue
            p, q = term.amp_pows
            out = out + w * A ** p * np.conj(A) ** q * np.exp(1j * term.harmonic * phi)
        return out.real

    def to_text(self) -> str:
        return "y_R = " + self.series.to_text()


def render_solution(solution: FourierSecularSeries, flow: AmplitudeFlow) -> RenormalizedSolution:
    """Drop secular terms and add the first-order rate corrections.

    For every parameter with a rate entry in ``flow`` the regular harmonics
    ``m != +-1`` of its first order acquire the partner
    ``epsdot * 2im / ((m^2 - 1) w) * Y_1m``, unless ``solution`` was expanded
    with rates and already holds them.
    """
    regular = solution.filter(lambda t: t.t_pow == 0)
    have_rates = {name for t in regular.terms for name, _ in t.epsdot_pows}
    extra = []
    for eps, epsdot in flow.entries():
        if eps or not epsdot:
            continue
        (name, _), = epsdot
        if name == OMEGA or name in have_rates:
            continue
        for t in regular.terms:
            m = t.harmonic
            if t.eps_pows != ((name, 1),) or t.epsdot_pows or abs(m) == 1:
                continue
            factor = RationalComplex(0, Fraction(2 * m, m * m - 1))
            extra.append(SeriesTerm(t.coeff * factor, t.omega_pow - 1, 0, m, t.amp_pows,
                                    (), epsdot))
    return RenormalizedSolution(regular + FourierSecularSeries.from_terms(extra), flow)


# ----------------------------------------------------------- verification

def group_law_defect(solution: FourierSecularSeries, flow: AmplitudeFlow,
                     lattice: set[Order] | None = None) -> FourierSecularSeries:
    """``d/dt1`` of the solution at ``t1 -> t`` with ``dA/dt1`` given by ``flow``.

    Vanishes identically (order by order) when the flow renormalizes every
    harmonic, not only the prime one.
    """
    if lattice is None:
        lattice = set(solution.orders()) - {((), ())}
    inner = lattice | {((), ())}

    def keep(eps, epsdot):
        return (eps, epsdot) in inner

    adot = flow.series
    adot_c = adot.conj()
    out: list[SeriesTerm] = []
    chain = FourierSecularSeries.empty()
    for t in solution.terms:
        if t.t_pow == 1:
            out.append(SeriesTerm(-t.coeff, t.omega_pow, 0, t.harmonic, t.amp_pows,
                                  t.eps_pows, t.epsdot_pows))
        if t.t_pow:
            continue
        p, q = t.amp_pows
        if p:
            base = FourierSecularSeries.from_terms([SeriesTerm(t.coeff * p, t.omega_pow, 0, t.harmonic,
                                                               (p - 1, q), t.eps_pows, t.epsdot_pows)])
            chain = chain + mul(base, adot, keep)
        if q:
            base = FourierSecularSeries.from_terms([SeriesTerm(t.coeff * q, t.omega_pow, 0, t.harmonic,
                                                               (p, q - 1), t.eps_pows, t.epsdot_pows)])
            chain = chain + mul(base, adot_c, keep)
    total = FourierSecularSeries.from_terms(out) + chain
    return total.filter(lambda t: (t.eps_pows, t.epsdot_pows) in lattice)


# ---------------------------------------------------------------- pipeline

@dataclass(frozen=True)
class Derivation:
    model: ModelSpec
    solution: FourierSecularSeries
    flow: AmplitudeFlow
    polar: PolarRGSystem
    renormalized: RenormalizedSolution


def derive(model: ModelSpec, loop: tuple[str, str] | None = None) -> Derivation:
    """Full pipeline: expansion, adiabatic flow, rate corrections, polar form."""
    solution = expand(model)
    flow = nonadiabatic_eps(extract_flow(solution), model)
    if model.omega_time_dependent:
        flow = nonadiabatic_omega(flow, model)
    return Derivation(model, solution, flow, polar_form(flow, loop), render_solution(solution, flow))


# ------------------------------------------------------------- residual

def _numeric_poly(series: FourierSecularSeries, values: dict[str, float]) -> dict[tuple[int, int, int], complex]:
    """``{(p, q, m): c}`` for the adiabatic part of ``series`` at numeric parameter values."""
    omega = values[OMEGA]
    out: dict[tuple[int, int, int], complex] = {}
    for t in series.terms:
        if t.epsdot_pows or t.t_pow:
            continue
        w = complex(t.coeff) * omega ** t.omega_pow
        for name, n in t.eps_pows:
            w *= values[name] ** n
        key = (t.amp_pows[0], t.amp_pows[1], t.harmonic)
        out[key] = out.get(key, 0j) + w
    return out


def _pmul_num(a, b):
    out = {}
    for (p1, q1, m1), c1 in a.items():
        for (p2, q2, m2), c2 in b.items():
            k = (p1 + p2, q1 + q2, m1 + m2)
            out[k] = out.get(k, 0j) + c1 * c2
    return out


def _padd_num(*polys, scale=None):
    out = {}
    for i, poly in enumerate(polys):
        s = 1.0 if scale is None else scale[i]
        for k, c in poly.items():
            out[k] = out.get(k, 0j) + s * c
    return out


def _total_derivative(y, F, Fbar, omega):
    """``d/dt`` of a polynomial in ``A, conj(A), e^{i w t}`` along ``dA/dt = F``."""
    out = {}
    for (p, q, m), c in y.items():
        if m:
            out[(p, q, m)] = out.get((p, q, m), 0j) + 1j * m * omega * c
        if p:
            for k, v in _pmul_num({(p - 1, q, m): p * c}, F).items():
                out[k] = out.get(k, 0j) + v
        if q:
            for k, v in _pmul_num({(p, q - 1, m): q * c}, Fbar).items():
                out[k] = out.get(k, 0j) + v
    return out


def _eval_num(poly, t, A, omega):
    A = np.asarray(A, dtype=complex)
    E = np.exp(1j * omega * np.asarray(t, dtype=float))
    out = np.zeros(np.broadcast(A, E).shape, dtype=complex)
    for (p, q, m), c in poly.items():
        out = out + c * A ** p * np.conj(A) ** q * E ** m
    return out


def ode_residual(derivation: Derivation, values: dict[str, float], t, A):
    """``y_R'' + w^2 y_R - sum eps_i f_i(y_R, y_R')`` for constant parameters.

    Time derivatives go through ``dA/dt`` of the adiabatic flow exactly, so the
    residual is a function of ``(t, A)`` alone and carries no integration error.
    """
    omega = values[OMEGA]
    flow = _numeric_poly(derivation.flow.series, values)
    F = {(p, q, 0): c for (p, q, _), c in flow.items()}
    Fbar = {(q, p, 0): np.conj(c) for (p, q, _), c in F.items()}
    y = _numeric_poly(derivation.renormalized.series, values)
    dy = _total_derivative(y, F, Fbar, omega)
    ddy = _total_derivative(dy, F, Fbar, omega)
    yv = _eval_num(y, t, A, omega).real
    dyv = _eval_num(dy, t, A, omega).real
    ddyv = _eval_num(ddy, t, A, omega).real
    rhs = np.zeros_like(yv)
    for name, poly in derivation.model.nonlinearity.items():
        for (a, b), c in poly.items():
            rhs = rhs + values[name] * float(c) * yv ** a * dyv ** b
    return ddyv + omega ** 2 * yv - rhs
