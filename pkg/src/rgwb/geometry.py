"""Limit cycle, geometric connection and curvature of a polar RG system.

With ``f`` the radial rate and ``Omega`` the phase rate, the connection is

    a_i = (dR/deps_i - df/depsdot_i) / (df/dr) * dOmega/dr + dOmega/depsdot_i

evaluated on the cycle ``r = R(eps)``; the curvature is
``chi = d a_2 / d eps_1 - d a_1 / d eps_2``. Radial derivatives and
parameter derivatives of the coefficients are exact; the curvature takes
central differences of the connection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad
from scipy.optimize import brentq

from .polar import PolarRGSystem
from .protocol import OMEGA, CycleProtocol


class GeometryError(RuntimeError):
    pass


class NoStableCycle(GeometryError):
    pass


class DegenerateCycle(GeometryError):
    pass


class StencilOutOfDomain(GeometryError):
    pass


@dataclass(frozen=True)
class ConnectionSample:
    eps: dict[str, float]
    a: tuple[float, float]
    R: float
    params: tuple[str, str]

    def to_json(self) -> dict:
        return {"eps": dict(self.eps), "params": list(self.params), "a": list(self.a), "R": self.R}


@dataclass(frozen=True)
class CurvatureSample:
    eps: dict[str, float]
    a: tuple[float, float]
    R: float
    chi: float
    h: float
    richardson_err: float
    params: tuple[str, str]

    def to_json(self) -> dict:
        return {"eps": dict(self.eps), "params": list(self.params), "a": list(self.a), "R": self.R,
                "chi": self.chi, "h": self.h, "richardson_err": self.richardson_err}


def _loop(sys: PolarRGSystem) -> tuple[str, str]:
    if sys.param_names is None:
        raise ValueError("PolarRGSystem has no loop parameters; use with_loop(p1, p2)")
    return sys.param_names


def limit_cycle_radius(sys: PolarRGSystem, eps: Mapping[str, float], r_max: float = 10.0,
                       n_grid: int = 2000) -> float:
    """Stable positive root of the adiabatic radial rate.

    The smallest root in ``(0, r_max]`` where ``f`` changes sign from positive
    to negative is polished with Brent's method.
    """
    c = sys.coefficients("f", eps)
    grid = np.linspace(r_max / n_grid, r_max, n_grid)
    vals = P.polyval(grid, c)
    for i in range(n_grid - 1):
        if vals[i] > 0 and vals[i + 1] <= 0:
            if vals[i + 1] == 0:
                return float(grid[i + 1])
            return brentq(lambda r: P.polyval(r, c), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)
    raise NoStableCycle(f"no stable limit cycle in (0, {r_max}] at {dict(eps)}")


def _full_connection(sys, eps, r_max):
    R = limit_cycle_radius(sys, eps, r_max)
    df = P.polyder(sys.coefficients("f", eps))
    f_r = P.polyval(R, df)
    scale = float(np.max(np.abs(df))) if df.size else 0.0
    if scale == 0.0 or abs(f_r) < 1e-12 * scale * max(1.0, R) ** (df.size - 1):
        raise DegenerateCycle(f"df/dr vanishes on the cycle at {eps}")
    Om_r = P.polyval(R, P.polyder(sys.coefficients("Omega", eps)))
    a = []
    for name in sys.param_names:
        dR = -P.polyval(R, sys.coefficients("f", eps, d_param=name)) / f_r
        df_rate = P.polyval(R, sys.coefficients("f", eps, rate=name))
        dOm_rate = P.polyval(R, sys.coefficients("Omega", eps, rate=name))
        a.append((dR - df_rate) / f_r * Om_r + dOm_rate)
    return np.array(a), R


# scale factors for the small-parameter limit; Richardson removes O(lam) and O(lam^2)
_LIMIT_SCALES = (1e-2, 5e-3, 2.5e-3)


def _singular_connection(sys, eps, r_max):
    """``lim_{lam -> 0} a(lam * eps)`` with every small parameter scaled, ``omega`` fixed."""
    samples = []
    for lam in _LIMIT_SCALES:
        point = {k: (v if k == OMEGA else lam * v) for k, v in eps.items()}
        samples.append(_full_connection(sys, point, r_max)[0])
    a1, a2, a3 = samples
    r1 = 2 * a2 - a1
    r2 = 2 * a3 - a2
    R = limit_cycle_radius(sys, {k: (v if k == OMEGA else _LIMIT_SCALES[-1] * v) for k, v in eps.items()},
                           r_max)
    return (4 * r2 - r1) / 3, R


def connection(sys: PolarRGSystem, eps: Mapping[str, float], singular_only: bool = False,
               r_max: float = 10.0) -> ConnectionSample:
    """Geometric connection ``(a_1, a_2)`` at the parameter point ``eps``.

    ``singular_only`` keeps the scale-invariant part of the connection, the
    limit of ``a(lam * eps)`` as all small parameters shrink together at
    fixed ``omega``. Contributions that vanish in that limit (everything
    regular as the dissipation goes to zero) are dropped; for the Van der
    Pol-Duffing flow this leaves ``a_beta = -3 beta / (2 mu w^3)``, ``a_mu = 0``.
    """
    eps = dict(eps)
    names = _loop(sys)
    if singular_only:
        a, R = _singular_connection(sys, eps, r_max)
    else:
        a, R = _full_connection(sys, eps, r_max)
    return ConnectionSample(eps, (float(a[0]), float(a[1])), float(R), names)


def _chi(sys, eps, h, singular_only):
    p1, p2 = _loop(sys)
    steps = []
    for name in (p1, p2):
        step = h * abs(eps[name])
        if step == 0:
            step = h
        steps.append(step)

    def a_at(name, delta, idx):
        point = dict(eps)
        point[name] += delta
        try:
            return connection(sys, point, singular_only).a[idx]
        except NoStableCycle as exc:
            raise StencilOutOfDomain(str(exc)) from exc

    d1 = (a_at(p1, steps[0], 1) - a_at(p1, -steps[0], 1)) / (2 * steps[0])
    d2 = (a_at(p2, steps[1], 0) - a_at(p2, -steps[1], 0)) / (2 * steps[1])
    return d1 - d2


def curvature(sys: PolarRGSystem, eps: Mapping[str, float], h: float = 1e-4,
              singular_only: bool = False) -> CurvatureSample:
    """``chi`` by central differences with steps ``h*|eps_i|``; the ``h/2`` estimate gives the error."""
    eps = dict(eps)
    base = connection(sys, eps, singular_only)
    chi = _chi(sys, eps, h, singular_only)
    chi_half = _chi(sys, eps, h / 2, singular_only)
    return CurvatureSample(eps, base.a, base.R, float(chi), h, float(abs(chi - chi_half)), base.params)


def predicted_loop_phase(sys: PolarRGSystem, loop: CycleProtocol, mode: str = "curvature",
                         singular_only: bool = False, h: float = 1e-4) -> float:
    """Geometric phase for ``loop``.

    ``mode="curvature"`` returns ``orientation * pi * d1 * d2 * chi(center)``,
    valid for small loops. ``mode="line"`` integrates the connection around
    the ellipse.
    """
    if sys.param_names != loop.loop:
        sys = sys.with_loop(*loop.loop)
    center = loop.center
    d1, d2 = loop.radii
    if mode == "curvature":
        chi = curvature(sys, center, h, singular_only).chi
        return loop.orientation * math.pi * d1 * d2 * chi
    if mode != "line":
        raise ValueError(f"unknown mode {mode!r}")
    p1, p2 = loop.loop

    def integrand(phi):
        point = dict(center)
        point[p1] = center[p1] + d1 * math.cos(phi)
        point[p2] = center[p2] + d2 * math.sin(phi)
        a1, a2 = connection(sys, point, singular_only).a
        return -a1 * d1 * math.sin(phi) + a2 * d2 * math.cos(phi)

    value, _ = quad(integrand, 0.0, 2 * math.pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return loop.orientation * value
