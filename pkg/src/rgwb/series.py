"""Exact Fourier-secular series and the driven harmonic oscillator solver.

A series is a finite sum of terms

    c * w^k * (t-t1)^l * exp(i m w t) * A^p * conj(A)^q * prod(eps_i^n_i) * prod(epsdot_i^d_i)

with ``c`` an exact Gaussian rational. Everything here is exact; floats only
appear in the numeric modules downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Iterable, Iterator, Mapping

Monomial = tuple[tuple[str, int], ...]
Key = tuple[Monomial, Monomial, int, int, int, int, int]


@dataclass(frozen=True, slots=True)
class RationalComplex:
    """Gaussian rational ``re + i*im`` with exact :class:`Fraction` parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value) -> RationalComplex:
        if isinstance(value, RationalComplex):
            return value
        if isinstance(value, complex):
            raise TypeError("floating complex values are not exact; pass a RationalComplex")
        return cls(Fraction(value))

    @property
    def re_num(self) -> int:
        return self.re.numerator

    @property
    def re_den(self) -> int:
        return self.re.denominator

    @property
    def im_num(self) -> int:
        return self.im.numerator

    @property
    def im_den(self) -> int:
        return self.im.denominator

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __neg__(self) -> RationalComplex:
        return RationalComplex(-self.re, -self.im)

    def __add__(self, other) -> RationalComplex:
        other = RationalComplex.coerce(other)
        return RationalComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> RationalComplex:
        return self + (-RationalComplex.coerce(other))

    def __rsub__(self, other) -> RationalComplex:
        return RationalComplex.coerce(other) - self

    def __mul__(self, other) -> RationalComplex:
        other = RationalComplex.coerce(other)
        return RationalComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> RationalComplex:
        other = RationalComplex.coerce(other)
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError("division by zero RationalComplex")
        return self * RationalComplex(other.re / norm, -other.im / norm)

    def __rtruediv__(self, other) -> RationalComplex:
        return RationalComplex.coerce(other) / self

    def conj(self) -> RationalComplex:
        return RationalComplex(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        return format_coeff(self)

    def __repr__(self) -> str:
        return f"RationalComplex({self.re}, {self.im})"


I = RationalComplex(0, 1)
ONE = RationalComplex(1)


def format_coeff(c: RationalComplex) -> str:
    """Compact text for an exact coefficient, e.g. ``1/2``, ``-i/16``, ``(1/2+3i/4)``."""

    def imag_part(x: Fraction) -> str:
        sign = "-" if x < 0 else ""
        x = abs(x)
        num = "" if x.numerator == 1 else str(x.numerator)
        den = "" if x.denominator == 1 else f"/{x.denominator}"
        return f"{sign}{num}i{den}"

    if c.im == 0:
        return str(c.re)
    if c.re == 0:
        return imag_part(c.im)
    im = imag_part(c.im)
    if not im.startswith("-"):
        im = "+" + im
    return f"({c.re}{im})"


def mono(**powers: int) -> Monomial:
    """Canonical monomial from keyword powers, dropping zeros."""
    return tuple(sorted((k, v) for k, v in powers.items() if v))


def mono_from(mapping: Mapping[str, int] | Iterable[tuple[str, int]]) -> Monomial:
    items = mapping.items() if isinstance(mapping, Mapping) else mapping
    acc: dict[str, int] = {}
    for name, n in items:
        if n < 0:
            raise ValueError(f"negative power {n} for {name!r}")
        acc[name] = acc.get(name, 0) + n
    return tuple(sorted((k, v) for k, v in acc.items() if v))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return mono_from(list(a) + list(b))


def mono_degree(a: Monomial) -> int:
    return sum(n for _, n in a)


def format_monomial(a: Monomial, dot: bool = False) -> str:
    parts = []
    for name, n in a:
        base = f"{name}dot" if dot else name
        parts.append(base if n == 1 else f"{base}^{n}")
    return "*".join(parts)


@dataclass(frozen=True, slots=True)
class SeriesTerm:
    """One monomial of a Fourier-secular series.

    ``harmonic`` is signed; the complex-conjugate partner of a term is carried
    explicitly rather than implied. ``epsdot_pows`` may name ``"omega"`` to tag
    a frequency-rate term.
    """

    coeff: RationalComplex
    omega_pow: int = 0
    t_pow: int = 0
    harmonic: int = 0
    amp_pows: tuple[int, int] = (0, 0)
    eps_pows: Monomial = ()
    epsdot_pows: Monomial = ()

    def __post_init__(self):
        object.__setattr__(self, "coeff", RationalComplex.coerce(self.coeff))
        object.__setattr__(self, "eps_pows", mono_from(self.eps_pows))
        object.__setattr__(self, "epsdot_pows", mono_from(self.epsdot_pows))
        p, q = self.amp_pows
        if self.t_pow < 0 or p < 0 or q < 0:
            raise ValueError("t_pow and amplitude powers must be non-negative")
        if mono_degree(self.epsdot_pows) > 1:
            raise ValueError("only first order in parameter rates is supported")

    @property
    def key(self) -> Key:
        p, q = self.amp_pows
        return (self.eps_pows, self.epsdot_pows, self.harmonic, self.t_pow, p, q, self.omega_pow)

    @classmethod
    def from_key(cls, key: Key, coeff: RationalComplex) -> SeriesTerm:
        eps, epsdot, m, l, p, q, k = key
        return cls(coeff, k, l, m, (p, q), eps, epsdot)

    def conj(self) -> SeriesTerm:
        p, q = self.amp_pows
        return SeriesTerm(self.coeff.conj(), self.omega_pow, self.t_pow, -self.harmonic,
                          (q, p), self.eps_pows, self.epsdot_pows)


def _conj_key(key: Key) -> Key:
    eps, epsdot, m, l, p, q, k = key
    return (eps, epsdot, -m, l, q, p, k)


@dataclass(frozen=True)
class FourierSecularSeries:
    """Immutable, canonically merged sum of :class:`SeriesTerm`."""

    _data: Mapping[Key, RationalComplex] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, terms: Iterable[SeriesTerm]) -> FourierSecularSeries:
        acc: dict[Key, RationalComplex] = {}
        for term in terms:
            _accumulate(acc, term.key, term.coeff)
        return cls(_prune(acc))

    @classmethod
    def empty(cls) -> FourierSecularSeries:
        return cls({})

    @property
    def terms(self) -> list[SeriesTerm]:
        return [SeriesTerm.from_key(k, self._data[k]) for k in sorted(self._data)]

    def items(self) -> Iterator[tuple[Key, RationalComplex]]:
        for k in sorted(self._data):
            yield k, self._data[k]

    def coefficient(self, key: Key) -> RationalComplex:
        return self._data.get(key, RationalComplex())

    def __len__(self) -> int:
        return len(self._data)

    def __bool__(self) -> bool:
        return bool(self._data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FourierSecularSeries):
            return NotImplemented
        return dict(self._data) == dict(other._data)

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def __add__(self, other: FourierSecularSeries) -> FourierSecularSeries:
        return add(self, other)

    def __sub__(self, other: FourierSecularSeries) -> FourierSecularSeries:
        return add(self, other.scale(-1))

    def __neg__(self) -> FourierSecularSeries:
        return self.scale(-1)

    def __mul__(self, other):
        if isinstance(other, FourierSecularSeries):
            return mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c, omega_pow: int = 0) -> FourierSecularSeries:
        c = RationalComplex.coerce(c)
        if not c:
            return FourierSecularSeries.empty()
        out = {}
        for (eps, epsdot, m, l, p, q, k), v in self._data.items():
            out[(eps, epsdot, m, l, p, q, k + omega_pow)] = v * c
        return FourierSecularSeries(out)

    def times_monomial(self, eps: Monomial = (), epsdot: Monomial = (), t_pow: int = 0) -> FourierSecularSeries:
        out: dict[Key, RationalComplex] = {}
        for (e, ed, m, l, p, q, k), v in self._data.items():
            new_ed = mono_mul(ed, epsdot)
            if mono_degree(new_ed) > 1:
                continue
            _accumulate(out, (mono_mul(e, eps), new_ed, m, l + t_pow, p, q, k), v)
        return FourierSecularSeries(_prune(out))

    def filter(self, pred: Callable[[SeriesTerm], bool]) -> FourierSecularSeries:
        return FourierSecularSeries({t.key: t.coeff for t in self.terms if pred(t)})

    def order(self, eps: Monomial, epsdot: Monomial = ()) -> FourierSecularSeries:
        """Terms at exactly the given parameter monomial, with that monomial stripped."""
        out = {}
        for (e, ed, m, l, p, q, k), v in self._data.items():
            if e == eps and ed == epsdot:
                out[((), (), m, l, p, q, k)] = v
        return FourierSecularSeries(out)

    def orders(self) -> list[tuple[Monomial, Monomial]]:
        return sorted({(k[0], k[1]) for k in self._data})

    def conj(self) -> FourierSecularSeries:
        return FourierSecularSeries({_conj_key(k): v.conj() for k, v in self._data.items()})

    def is_real(self) -> bool:
        """Conjugation closure: every term has its conjugate partner."""
        for k, v in self._data.items():
            if self._data.get(_conj_key(k)) != v.conj():
                return False
        return True

    def ddt(self) -> FourierSecularSeries:
        return ddt(self)

    def to_text(self) -> str:
        return format_series(self)

    def __str__(self) -> str:
        return format_series(self)


def _accumulate(acc: dict, key, value: RationalComplex) -> None:
    if key in acc:
        acc[key] = acc[key] + value
    else:
        acc[key] = value


def _prune(acc: dict) -> dict:
    return {k: v for k, v in acc.items() if v}


def add(a: FourierSecularSeries, b: FourierSecularSeries) -> FourierSecularSeries:
    acc = dict(a._data)
    for k, v in b._data.items():
        _accumulate(acc, k, v)
    return FourierSecularSeries(_prune(acc))


def mul(
    a: FourierSecularSeries,
    b: FourierSecularSeries,
    keep: Callable[[Monomial, Monomial], bool] | None = None,
) -> FourierSecularSeries:
    """Distributive product.

    Products of two rate monomials are second order in nonadiabaticity and are
    discarded. ``keep(eps, epsdot)`` optionally truncates by parameter order.
    """
    acc: dict[Key, RationalComplex] = {}
    for (e1, d1, m1, l1, p1, q1, k1), v1 in a._data.items():
        for (e2, d2, m2, l2, p2, q2, k2), v2 in b._data.items():
            if d1 and d2:
                continue
            e = mono_mul(e1, e2)
            d = d1 or d2
            if keep is not None and not keep(e, d):
                continue
            _accumulate(acc, (e, d, m1 + m2, l1 + l2, p1 + p2, q1 + q2, k1 + k2), v1 * v2)
    return FourierSecularSeries(_prune(acc))


def ddt(a: FourierSecularSeries) -> FourierSecularSeries:
    """Time derivative with A, eps, w and t1 held fixed."""
    acc: dict[Key, RationalComplex] = {}
    for (e, d, m, l, p, q, k), v in a._data.items():
        if l:
            _accumulate(acc, (e, d, m, l - 1, p, q, k), v * l)
        if m:
            _accumulate(acc, (e, d, m, l, p, q, k + 1), v * RationalComplex(0, m))
    return FourierSecularSeries(_prune(acc))


def oscillator_operator(y: FourierSecularSeries) -> FourierSecularSeries:
    """``y'' + w^2 y``."""
    return ddt(ddt(y)) + y.scale(1, omega_pow=2)


def solve_particular(rhs_term: SeriesTerm) -> FourierSecularSeries:
    """Particular solution of ``y'' + w^2 y = B (t-t1)^l exp(i m w t)``.

    The solution is ``P(t-t1) exp(i m w t)``. Off resonance ``P`` has degree
    ``l`` and follows from the backward recursion started at
    ``p_l = B / ((1-m^2) w^2)``. On resonance (``|m| == 1``) it has degree
    ``l+1`` with ``p_{l+1} = B / (2 i m (l+1) w)`` and ``p_0 = 0``, so the
    prime-frequency part vanishes at ``t = t1``.
    """
    m, l = rhs_term.harmonic, rhs_term.t_pow
    B = rhs_term.coeff
    # p_j = c_j * w^(omega_pow - shift - (top - j)); every c_j is a pure number
    if abs(m) != 1:
        top, shift = l, 2
        lead = Fraction(1 - m * m)
        c = {top: B / lead}
        for k in range(l - 1, -1, -1):
            s = RationalComplex(0, 2 * m * (k + 1)) * c[k + 1]
            if k + 2 in c:
                s = s + c[k + 2] * ((k + 2) * (k + 1))
            c[k] = -s / lead
    else:
        top, shift = l + 1, 1
        c = {top: B / RationalComplex(0, 2 * m * (l + 1))}
        for k in range(l - 1, -1, -1):
            # (k+2)(k+1) p_{k+2} + 2 i m w (k+1) p_{k+1} = 0
            c[k + 1] = -(c[k + 2] * (k + 2)) / RationalComplex(0, 2 * m)
    p, q = rhs_term.amp_pows
    terms = []
    for j, cj in c.items():
        if j == 0 and abs(m) == 1:
            continue
        k = rhs_term.omega_pow - shift - (top - j)
        terms.append(SeriesTerm(cj, k, j, m, (p, q), rhs_term.eps_pows, rhs_term.epsdot_pows))
    return FourierSecularSeries.from_terms(terms)


def solve_oscillator(rhs: FourierSecularSeries) -> FourierSecularSeries:
    out = FourierSecularSeries.empty()
    for term in rhs.terms:
        out = out + solve_particular(term)
    return out


def bare_amplitude() -> FourierSecularSeries:
    """``A exp(i w t) + c.c.``"""
    return FourierSecularSeries.from_terms([
        SeriesTerm(ONE, harmonic=1, amp_pows=(1, 0)),
        SeriesTerm(ONE, harmonic=-1, amp_pows=(0, 1)),
    ])


# ---------------------------------------------------------------- printing

def _amp_text(p: int, q: int, j: int = 0) -> list[str]:
    """Factors for ``A^p |A|^(2j) conj(A)^q``."""
    parts = []
    if p:
        parts.append("A" if p == 1 else f"A^{p}")
    if j:
        parts.append(f"|A|^{2 * j}")
    if q:
        parts.append("conj(A)" if q == 1 else f"conj(A)^{q}")
    return parts


def _poly_abs2(coeffs: dict[int, Fraction]) -> str:
    """Integer polynomial in |A|^2, ascending powers."""
    out = ""
    for j in sorted(coeffs):
        c = coeffs[j]
        mag = abs(c)
        if j == 0:
            body = str(mag)
        else:
            var = "|A|^2" if j == 1 else f"|A|^{2 * j}"
            body = var if mag == 1 else f"{mag}{var}"
        if not out:
            out = ("-" if c < 0 else "") + body
        else:
            out += ("-" if c < 0 else "+") + body
    return out


def _unit_and_reals(values: list[RationalComplex]) -> tuple[RationalComplex, list[Fraction]] | None:
    if all(v.im == 0 for v in values):
        return ONE, [v.re for v in values]
    if all(v.re == 0 for v in values):
        return I, [v.im for v in values]
    return None


def _group_text(prefix: list[str], coeffs: dict[int, RationalComplex], base: tuple[int, int]) -> str:
    """Render ``sum_j c_j |A|^(2j)`` times the base amplitude monomial."""
    jmin = min(coeffs)
    coeffs = {j - jmin: c for j, c in coeffs.items()}
    amp = _amp_text(base[0], base[1], jmin)
    if len(coeffs) == 1:
        return _join(format_coeff(coeffs[0]), prefix + amp)
    split = _unit_and_reals(list(coeffs.values()))
    if split is None:
        inner = " + ".join(
            _join(format_coeff(c), _amp_text(0, 0, j) or ["1"]) for j, c in sorted(coeffs.items())
        )
        return "*".join(prefix + amp + [f"({inner})"])
    unit, reals = split
    den = 1
    for r in reals:
        den = lcm(den, r.denominator)
    nums = {j: int(r * den) for j, r in zip(coeffs, reals)}
    g = 0
    for n in nums.values():
        g = gcd(g, n)
    sign = -1 if nums[0] < 0 else 1
    poly = {j: Fraction(n * sign, g) for j, n in nums.items()}
    lead = unit * Fraction(g * sign, den)
    return _join(format_coeff(lead), prefix + amp + [f"({_poly_abs2(poly)})"])


def _join(coeff: str, factors: list[str]) -> str:
    if coeff == "1":
        return "*".join(factors) if factors else "1"
    if coeff == "-1":
        return "-" + "*".join(factors) if factors else "-1"
    c = coeff if coeff.startswith("(") or "/" not in coeff else f"({coeff})"
    return "*".join([c] + factors)


def format_series(s: FourierSecularSeries) -> str:
    """Canonical text form.

    Terms sharing parameter order, harmonic, secular power, power of ``w`` and
    phase charge ``p - q`` are grouped as a polynomial in ``|A|^2``. Real
    series print only one member of each conjugate pair followed by ``+ c.c.``.
    """
    if not s:
        return "0"
    real = s.is_real()
    groups: dict[tuple, dict[int, RationalComplex]] = {}
    bases: dict[tuple, tuple[int, int]] = {}
    for (eps, epsdot, m, l, p, q, k), v in s.items():
        if real:
            if m < 0 or (m == 0 and q > p):
                continue
            if m == 0 and p == q:
                v = RationalComplex(v.re / 2)
        j = min(p, q)
        gkey = (eps, epsdot, m, l, k, p - q)
        groups.setdefault(gkey, {})[j] = v
        base = (p - j, q - j)
        bases[gkey] = base
    chunks = []
    for gkey in sorted(groups, key=lambda g: (g[0], g[1], abs(g[2]), g[2] < 0, g[3], g[4], g[5])):
        eps, epsdot, m, l, k, _ = gkey
        prefix = []
        if eps:
            prefix.append(format_monomial(eps))
        if epsdot:
            prefix.append(format_monomial(epsdot, dot=True))
        tail = []
        if k:
            tail.append("w" if k == 1 else f"w^{k}")
        if l:
            tail.append("(t-t1)" if l == 1 else f"(t-t1)^{l}")
        text = _group_text(prefix + tail, groups[gkey], bases[gkey])
        if m:
            mm = "" if abs(m) == 1 else str(abs(m))
            sgn = "-" if m < 0 else ""
            text += f"*e^{{{sgn}{mm}i w t}}"
        chunks.append(text)
    out = chunks[0]
    for c in chunks[1:]:
        out += " - " + c[1:] if c.startswith("-") else " + " + c
    if real:
        out += " + c.c."
    return out
