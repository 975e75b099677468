import cmath
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgwb.series import (
    I,
    ONE,
    FourierSecularSeries,
    RationalComplex,
    SeriesTerm,
    add,
    bare_amplitude,
    ddt,
    format_coeff,
    format_series,
    mul,
    oscillator_operator,
    solve_oscillator,
    solve_particular,
)


def S(*terms):
    return FourierSecularSeries.from_terms(terms)


def T(c, k=0, l=0, m=0, pq=(0, 0), eps=(), epsdot=()):
    return SeriesTerm(RationalComplex.coerce(c), k, l, m, pq, eps, epsdot)


def evaluate(s, t, t1, A, w, eps=None):
    """Numeric value of a series (independent of the library's evaluators)."""
    eps = eps or {}
    total = 0j
    for term in s.terms:
        v = complex(term.coeff) * w ** term.omega_pow * (t - t1) ** term.t_pow
        v *= cmath.exp(1j * term.harmonic * w * t)
        p, q = term.amp_pows
        v *= A ** p * A.conjugate() ** q
        for name, n in term.eps_pows:
            v *= eps[name] ** n
        total += v
    return total


# ------------------------------------------------------------ RationalComplex

def test_rational_complex_normalizes_and_is_exact():
    z = RationalComplex(Fraction(2, -4), Fraction(6, 8))
    assert (z.re_num, z.re_den, z.im_num, z.im_den) == (-1, 2, 3, 4)
    assert z * z.conj() == RationalComplex(Fraction(13, 16))
    assert (ONE / 3) * 3 == ONE
    assert I * I == -ONE


def test_format_coeff():
    assert format_coeff(RationalComplex(Fraction(1, 2))) == "1/2"
    assert format_coeff(RationalComplex(0, Fraction(-1, 16))) == "-i/16"
    assert format_coeff(RationalComplex(0, Fraction(3, 2))) == "3i/2"


# ------------------------------------------------------------------- add/mul

def test_additive_inverse_gives_empty_series():
    y0 = bare_amplitude()
    assert not add(y0, -y0)
    assert len(y0 - y0) == 0


def test_equal_keys_merge():
    assert S(T(Fraction(1, 3), m=2), T(Fraction(2, 3), m=2)) == S(T(1, m=2))


def test_orders_do_not_merge():
    y1 = S(T(Fraction(1, 2), l=1, m=1, pq=(1, 0), eps=(("mu", 1),)))
    total = bare_amplitude() + y1
    assert len(total) == 3
    assert total.order((("mu", 1),)) == S(T(Fraction(1, 2), l=1, m=1, pq=(1, 0)))


def test_square_of_bare_amplitude():
    y0 = bare_amplitude()
    want = S(T(1, m=2, pq=(2, 0)), T(2, m=0, pq=(1, 1)), T(1, m=-2, pq=(0, 2)))
    assert mul(y0, y0) == want


def test_cubic_velocity_product_prime_coefficient():
    # y0^2 * y0' expanded by hand: prime-harmonic coefficient i w A|A|^2
    y0 = bare_amplitude()
    prod = mul(mul(y0, y0), ddt(y0))
    assert prod.coefficient(((), (), 1, 0, 2, 1, 1)) == I
    assert prod.coefficient(((), (), 3, 0, 3, 0, 1)) == I
    assert prod.is_real()


def test_product_with_empty_is_empty():
    assert not mul(bare_amplitude(), FourierSecularSeries.empty())


def test_rate_products_are_dropped():
    a = S(T(1, m=1, pq=(1, 0), epsdot=(("mu", 1),)))
    assert not mul(a, a)


# ----------------------------------------------------------------------- ddt

def test_ddt_examples():
    assert ddt(S(T(1, m=1, pq=(1, 0)))) == S(T(I, k=1, m=1, pq=(1, 0)))
    assert ddt(S(T(1, l=1, m=1))) == S(T(1, m=1), T(I, k=1, l=1, m=1))


def test_first_order_vdp_inhomogeneity():
    # y1 of the O(mu) Van der Pol solution reproduces its own driving term
    y1 = S(
        T(Fraction(1, 2), l=1, m=1, pq=(1, 0)), T(Fraction(-1, 2), l=1, m=1, pq=(2, 1)),
        T(RationalComplex(0, Fraction(1, 8)), k=-1, m=3, pq=(3, 0)),
    )
    y1 = y1 + y1.conj()
    y0 = bare_amplitude()
    rhs = ddt(y0) - mul(mul(y0, y0), ddt(y0))
    assert oscillator_operator(y1) == rhs
    want = S(T(I, k=1, m=1, pq=(1, 0)), T(-I, k=1, m=1, pq=(2, 1)), T(-I, k=1, m=3, pq=(3, 0)))
    assert rhs == want + want.conj()


# ---------------------------------------------------------- solve_particular

def test_third_harmonic_particular_solution():
    rhs = T(-I, k=1, m=3, pq=(3, 0))
    assert solve_particular(rhs) == S(T(RationalComplex(0, Fraction(1, 8)), k=-1, m=3, pq=(3, 0)))


def test_resonant_particular_solution():
    B = S(T(I, k=1, m=1, pq=(1, 0)), T(-I, k=1, m=1, pq=(2, 1)))
    sol = solve_oscillator(B)
    assert sol == S(T(Fraction(1, 2), l=1, m=1, pq=(1, 0)), T(Fraction(-1, 2), l=1, m=1, pq=(2, 1)))


def test_static_drive():
    assert solve_particular(T(5, m=0, pq=(1, 1))) == S(T(5, k=-2, m=0, pq=(1, 1)))


def test_solve_empty():
    assert not solve_oscillator(FourierSecularSeries.empty())


def test_no_regular_prime_terms_in_solution():
    y0 = bare_amplitude()
    rhs = ddt(y0) - mul(mul(y0, y0), ddt(y0))
    sol = solve_oscillator(rhs)
    assert all(t.t_pow > 0 for t in sol.terms if abs(t.harmonic) == 1)


# ------------------------------------------------------------ property tests

rational = st.fractions(min_value=-20, max_value=20, max_denominator=12)
coeffs = st.builds(RationalComplex, rational, rational).filter(bool)
single_terms = st.builds(
    lambda c, k, l, m, p, q: T(c, k, l, m, (p, q)),
    coeffs, st.integers(-4, 2), st.integers(0, 4), st.integers(-7, 7),
    st.integers(0, 4), st.integers(0, 4),
)


@settings(max_examples=200, deadline=None)
@given(single_terms)
def test_oscillator_identity_and_degree_law(term):
    sol = solve_particular(term)
    assert oscillator_operator(sol) - S(term) == FourierSecularSeries.empty()
    degrees = [t.t_pow for t in sol.terms]
    assert {t.harmonic for t in sol.terms} == {term.harmonic}
    if abs(term.harmonic) == 1:
        assert max(degrees) == term.t_pow + 1
        assert min(degrees) >= 1
    else:
        assert max(degrees) == term.t_pow


@settings(max_examples=50, deadline=None)
@given(st.lists(single_terms, min_size=1, max_size=4))
def test_conjugation_closure(terms):
    rhs = S(*terms)
    rhs = rhs + rhs.conj()
    assert rhs.is_real()
    assert solve_oscillator(rhs).is_real()
    assert ddt(rhs).is_real()
    assert mul(rhs, rhs).is_real()


def test_time_translation_covariance():
    # y(t, t1; A) = y(t + s, t1 + s; A exp(-i w s)): coefficients only see t - t1
    y0 = bare_amplitude()
    y1 = solve_oscillator(ddt(y0) - mul(mul(y0, y0), ddt(y0)))
    y2 = solve_oscillator(ddt(y1) - mul(mul(y0, y0), ddt(y1)) - mul(mul(y0, y1), ddt(y0)).scale(2))
    rng = random.Random(3)
    for s in (y1, y2):
        for _ in range(5):
            t, t1, shift, w = (rng.uniform(-2, 2) for _ in range(4))
            A = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            lhs = evaluate(s, t, t1, A, w + 3)
            rhs = evaluate(s, t + shift, t1 + shift, A * cmath.exp(-1j * (w + 3) * shift), w + 3)
            assert abs(lhs - rhs) < 1e-9 * (1 + abs(lhs))


def test_rate_degree_limit():
    with pytest.raises(ValueError):
        T(1, epsdot=(("mu", 2),))


def test_pretty_printer():
    y0 = bare_amplitude()
    assert format_series(y0) == "A*e^{i w t} + c.c."
    assert format_series(mul(y0, y0)) == "|A|^2 + A^2*e^{2i w t} + c.c."
    y1 = solve_oscillator(ddt(y0) - mul(mul(y0, y0), ddt(y0)))
    assert format_series(y1) == "(1/2)*(t-t1)*A*(1-|A|^2)*e^{i w t} + (i/8)*w^-1*A^3*e^{3i w t} + c.c."
