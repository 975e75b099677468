"""Reference tables for the Van der Pol and Van der Pol-Duffing derivations.

These are typed term by term from the hand calculation, independently of
the expansion code, and serve both the test-suite and ``rgwb derive --golden``.
A series row ``(re, im, omega_pow, t_pow, m, p, q)`` stands for
``(re + i im) w^omega_pow (t-t1)^t_pow A^p conj(A)^q e^{i m w t}``; its complex
conjugate is added automatically.
"""
from __future__ import annotations

from fractions import Fraction as Fr

from .derivation import AmplitudeFlow
from .series import FourierSecularSeries, RationalComplex, SeriesTerm, mono_from

# ---------------------------------------------------------------- VdP

VDP_SERIES = {
    (): [(1, 0, 0, 0, 1, 1, 0)],
    (("mu", 1),): [
        # (1/2)(t-t1) A (1-|A|^2) e^{iwt}
        (Fr(1, 2), 0, 0, 1, 1, 1, 0), (Fr(-1, 2), 0, 0, 1, 1, 2, 1),
        # i A^3/(8w) e^{3iwt}
        (0, Fr(1, 8), -1, 0, 3, 3, 0),
    ],
    (("mu", 2),): [
        # -(i/16w)(t-t1) A (2 - 8|A|^2 + 7|A|^4) e^{iwt}
        (0, Fr(-2, 16), -1, 1, 1, 1, 0), (0, Fr(8, 16), -1, 1, 1, 2, 1), (0, Fr(-7, 16), -1, 1, 1, 3, 2),
        # (1/8)(t-t1)^2 A (1 - 4|A|^2 + 3|A|^4) e^{iwt}
        (Fr(1, 8), 0, 0, 2, 1, 1, 0), (Fr(-4, 8), 0, 0, 2, 1, 2, 1), (Fr(3, 8), 0, 0, 2, 1, 3, 2),
        # -(1/64w^2) A^3 (2 + |A|^2) e^{3iwt}
        (Fr(-2, 64), 0, -2, 0, 3, 3, 0), (Fr(-1, 64), 0, -2, 0, 3, 4, 1),
        # (3i/16w)(t-t1) A^3 (1-|A|^2) e^{3iwt}
        (0, Fr(3, 16), -1, 1, 3, 3, 0), (0, Fr(-3, 16), -1, 1, 3, 4, 1),
        # -(5/192w^2) A^5 e^{5iwt}
        (Fr(-5, 192), 0, -2, 0, 5, 5, 0),
    ],
}

# flow rows: (re, im, omega_pow, p, q) for A^p conj(A)^q, keyed by (eps, rate)
VDP_FLOW = {
    ((("mu", 1),), ()): [(Fr(1, 2), 0, 0, 1, 0), (Fr(-1, 2), 0, 0, 2, 1)],
    ((("mu", 2),), ()): [(0, Fr(-2, 16), -1, 1, 0), (0, Fr(8, 16), -1, 2, 1), (0, Fr(-7, 16), -1, 3, 2)],
    ((), (("mu", 1),)): [(0, Fr(1, 4), -1, 1, 0), (0, Fr(-1, 4), -1, 2, 1)],
    ((), (("omega", 1),)): [(Fr(-1, 2), 0, -1, 1, 0)],
    ((("mu", 1),), (("omega", 1),)): [(0, Fr(-1, 4), -2, 2, 1)],
}

# polar rows: (omega_pow, r_pow) -> coefficient, keyed by (eps, rate)
VDP_POLAR_F = {
    ((("mu", 1),), ()): {(0, 1): Fr(1, 2), (0, 3): Fr(-1, 8)},
    ((), (("omega", 1),)): {(-1, 1): Fr(-1, 2)},
}
VDP_POLAR_OMEGA = {
    ((("mu", 2),), ()): {(-1, 0): Fr(-32, 256), (-1, 2): Fr(32, 256), (-1, 4): Fr(-7, 256)},
    ((), (("mu", 1),)): {(-1, 0): Fr(1, 4), (-1, 2): Fr(-1, 16)},
    ((("mu", 1),), (("omega", 1),)): {(-2, 2): Fr(-1, 16)},
}

# --------------------------------------------------------------- VdPD

VDPD_SERIES = {
    (): [(1, 0, 0, 0, 1, 1, 0)],
    (("mu", 1),): VDP_SERIES[(("mu", 1),)],
    (("beta", 1),): [
        # (3i/2w)(t-t1) A|A|^2 e^{iwt}
        (0, Fr(3, 2), -1, 1, 1, 2, 1),
        # A^3/(8w^2) e^{3iwt}
        (Fr(1, 8), 0, -2, 0, 3, 3, 0),
    ],
    (("beta", 1), ("mu", 1)): [
        # -(1/4w^2)(t-t1) A|A|^2 (3 - 2|A|^2) e^{iwt}
        (Fr(-3, 4), 0, -2, 1, 1, 2, 1), (Fr(2, 4), 0, -2, 1, 1, 3, 2),
        # (3i/2w)(t-t1)^2 A|A|^2 (1-|A|^2) e^{iwt}
        (0, Fr(3, 2), -1, 2, 1, 2, 1), (0, Fr(-3, 2), -1, 2, 1, 3, 2),
        # (3i/32w^3) A^3 (1 - 2|A|^2) e^{3iwt}
        (0, Fr(3, 32), -3, 0, 3, 3, 0), (0, Fr(-6, 32), -3, 0, 3, 4, 1),
        # (3/16w^2)(t-t1) A^3 (1 - 4|A|^2) e^{3iwt}
        (Fr(3, 16), 0, -2, 1, 3, 3, 0), (Fr(-12, 16), 0, -2, 1, 3, 4, 1),
        # (i/24w^3) A^5 e^{5iwt}
        (0, Fr(1, 24), -3, 0, 5, 5, 0),
    ],
}

VDPD_FLOW = {
    ((("mu", 1),), ()): VDP_FLOW[((("mu", 1),), ())],
    ((("beta", 1),), ()): [(0, Fr(3, 2), -1, 2, 1)],
    ((("beta", 1), ("mu", 1)), ()): [(Fr(-3, 4), 0, -2, 2, 1), (Fr(2, 4), 0, -2, 3, 2)],
    ((), (("mu", 1),)): VDP_FLOW[((), (("mu", 1),))],
    ((), (("beta", 1),)): [(Fr(-3, 4), 0, -2, 2, 1)],
}

VDPD_POLAR_F = {
    ((("mu", 1),), ()): {(0, 1): Fr(1, 2), (0, 3): Fr(-1, 8)},
    ((("beta", 1), ("mu", 1)), ()): {(-2, 3): Fr(-6, 32), (-2, 5): Fr(1, 32)},
    ((), (("beta", 1),)): {(-2, 3): Fr(-3, 16)},
}
VDPD_POLAR_OMEGA = {
    ((("beta", 1),), ()): {(-1, 2): Fr(3, 8)},
    ((), (("mu", 1),)): {(-1, 0): Fr(1, 4), (-1, 2): Fr(-1, 16)},
}


# ------------------------------------------------------------ builders

def _c(re, im) -> RationalComplex:
    return RationalComplex(Fr(re), Fr(im))


def series(table) -> FourierSecularSeries:
    terms = []
    for eps, rows in table.items():
        for re, im, k, l, m, p, q in rows:
            t = SeriesTerm(_c(re, im), k, l, m, (p, q), mono_from(eps))
            terms.extend([t, t.conj()])
    return FourierSecularSeries.from_terms(terms)


def flow(table) -> AmplitudeFlow:
    terms = []
    for (eps, rate), rows in table.items():
        for re, im, k, p, q in rows:
            terms.append(SeriesTerm(_c(re, im), k, 0, 0, (p, q), mono_from(eps), mono_from(rate)))
    return AmplitudeFlow(FourierSecularSeries.from_terms(terms))


def _norm_polar(parts) -> dict:
    out = {}
    for key, part in parts.items():
        nz = {kj: Fr(c) for kj, c in part.items() if c}
        if nz:
            out[(mono_from(key[0]), mono_from(key[1]))] = nz
    return out


TABLES = {
    "vdp": (VDP_SERIES, VDP_FLOW, VDP_POLAR_F, VDP_POLAR_OMEGA),
    "vdpd": (VDPD_SERIES, VDPD_FLOW, VDPD_POLAR_F, VDPD_POLAR_OMEGA),
}


def compare(name: str, derivation) -> list[str]:
    """Differences between ``derivation`` and the table ``name``; empty when they agree exactly."""
    s_tab, f_tab, pf_tab, po_tab = TABLES[name]
    diffs = []
    want = series(s_tab)
    got = derivation.solution
    for key, c in sorted(set(want.items()) ^ set(got.items()), key=repr):
        src = "missing" if key in dict(want.items()) and want.coefficient(key) == c else "unexpected"
        diffs.append(f"series {src}: {key} -> {c}")
    if derivation.flow != flow(f_tab):
        diffs.append(f"flow differs:\n  want {flow(f_tab).to_text()}\n  got  {derivation.flow.to_text()}")
    for label, want_p, got_p in (("dr/dt", pf_tab, derivation.polar.f_parts),
                                 ("dtheta/dt", po_tab, derivation.polar.Omega_parts)):
        if _norm_polar(want_p) != _norm_polar(got_p):
            diffs.append(f"{label} differs: want {_norm_polar(want_p)} got {_norm_polar(got_p)}")
    return diffs
