"""Polar amplitude equations ``dr/dt = f(r, eps, epsdot)``, ``dtheta/dt = Omega(r, eps, epsdot)``."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

import numpy as np

from .series import Monomial, format_monomial, mono_degree

OMEGA = "omega"
Order = tuple[Monomial, Monomial]
# (omega power, r power) -> exact coefficient
Part = Mapping[tuple[int, int], Fraction]


@dataclass(frozen=True)
class PolarRGSystem:
    """Exact polynomial-in-``r`` parts of the polar flow.

    Parts are keyed by ``(eps monomial, rate monomial)``; the rate monomial is
    empty for adiabatic parts and names a single parameter (or ``omega``)
    otherwise. ``param_names`` designates the two loop parameters.
    """

    f_parts: Mapping[Order, Part]
    Omega_parts: Mapping[Order, Part]
    param_names: tuple[str, str] | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.param_names is not None:
            if len(self.param_names) != 2 or self.param_names[0] == self.param_names[1]:
                raise ValueError("exactly two distinct loop parameters are required")
            object.__setattr__(self, "param_names", tuple(self.param_names))

    def with_loop(self, *names: str) -> PolarRGSystem:
        return replace(self, param_names=tuple(names), _cache={})

    # ------------------------------------------------------------ numerics
    def _parts(self, kind: str) -> Mapping[Order, Part]:
        return self.f_parts if kind == "f" else self.Omega_parts

    def lowest_degree(self, kind: str = "f") -> int | None:
        degrees = [mono_degree(eps) for (eps, rate), part in self._parts(kind).items()
                   if not rate and any(part.values())]
        return min(degrees) if degrees else None

    def coefficients(self, kind: str, values: Mapping[str, float], rate: str | None = None,
                     d_param: str | None = None, degree: int | None = None) -> np.ndarray:
        """Ascending ``r``-coefficients of one part evaluated at ``values``.

        ``rate=None`` selects the adiabatic part, ``rate=name`` the coefficient
        of ``namedot``. ``d_param`` differentiates the coefficients with respect
        to a parameter (or ``omega``). ``degree`` keeps only adiabatic
        monomials of that total parameter degree.
        """
        omega = values[OMEGA]
        acc: dict[int, float] = {}
        for (eps, rates), part in self._parts(kind).items():
            if rate is None:
                if rates:
                    continue
            elif rates != ((rate, 1),):
                continue
            if degree is not None and mono_degree(eps) != degree:
                continue
            for (k, j), c in part.items():
                weight = float(c)
                pw = dict(eps)
                if d_param == OMEGA:
                    weight *= k
                    k -= 1
                elif d_param is not None:
                    n = pw.get(d_param, 0)
                    if n == 0:
                        continue
                    weight *= n
                    pw[d_param] = n - 1
                if weight == 0.0:
                    continue
                weight *= omega ** k
                for name, n in pw.items():
                    weight *= values[name] ** n
                acc[j] = acc.get(j, 0.0) + weight
        if not acc:
            return np.zeros(1)
        out = np.zeros(max(acc) + 1)
        for j, v in acc.items():
            out[j] = v
        return out

    def rates_in(self) -> set[str]:
        names = set()
        for parts in (self.f_parts, self.Omega_parts):
            for (_, rates) in parts:
                names.update(n for n, _ in rates)
        return names

    def __call__(self, r, values: Mapping[str, float], rates: Mapping[str, float] | None = None):
        """``(dr/dt, dtheta/dt)`` at radius ``r``."""
        rates = rates or {}
        P = np.polynomial.polynomial
        rdot = P.polyval(r, self.coefficients("f", values))
        thdot = P.polyval(r, self.coefficients("Omega", values))
        for name in self.rates_in():
            v = rates.get(name, 0.0)
            if v:
                rdot = rdot + v * P.polyval(r, self.coefficients("f", values, rate=name))
                thdot = thdot + v * P.polyval(r, self.coefficients("Omega", values, rate=name))
        return rdot, thdot

    # ------------------------------------------------------------- printing
    def to_text(self) -> str:
        return (f"dr/dt = {_format_parts(self.f_parts)}\n"
                f"dtheta/dt = {_format_parts(self.Omega_parts)}")

    def __str__(self) -> str:
        return self.to_text()

    def to_json(self) -> dict:
        def dump(parts):
            out = []
            for (eps, rates) in sorted(parts):
                terms = [{"omega_pow": k, "r_pow": j, "coeff": str(c)}
                         for (k, j), c in sorted(parts[(eps, rates)].items()) if c]
                if terms:
                    out.append({"eps": dict(eps), "rates": dict(rates), "terms": terms})
            return out
        return {"f": dump(self.f_parts), "Omega": dump(self.Omega_parts)}


def _format_parts(parts: Mapping[Order, Part]) -> str:
    chunks = []
    for (eps, rates) in sorted(parts):
        by_k: dict[int, dict[int, Fraction]] = {}
        for (k, j), c in parts[(eps, rates)].items():
            if c:
                by_k.setdefault(k, {})[j] = c
        for k in sorted(by_k):
            poly = " + ".join(
                (f"({c})" if c.denominator != 1 or c < 0 else str(c)) + ("" if j == 0 else "*r" if j == 1 else f"*r^{j}")
                for j, c in sorted(by_k[k].items())
            )
            prefix = []
            if eps:
                prefix.append(format_monomial(eps))
            if rates:
                prefix.append(format_monomial(rates, dot=True))
            if k:
                prefix.append("w" if k == 1 else f"w^{k}")
            chunks.append("*".join(prefix + [f"({poly})"]))
    return " + ".join(chunks) if chunks else "0"
