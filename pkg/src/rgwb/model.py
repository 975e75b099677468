"""Oscillator definitions ``y'' + w^2 y = sum_i eps_i f_i(y, ydot)`` and their text format.

Model files are line oriented ``key = value`` pairs; ``#`` starts a comment::

    name = vdp
    omega = 2.0 [time_dependent]
    param mu = 0.1 [time_dependent]
    nonlinearity = mu*(1 - y^2)*ydot
    orders = mu, mu^2
    vdp_omega_iteration = true

``nonlinearity`` is a polynomial in ``y``, ``ydot`` and the parameter names;
every monomial must carry exactly one parameter to the first power. Numeric
literals in it are read exactly (``0.5`` is ``1/2``). ``orders`` lists the
parameter monomials kept in the perturbative expansion; it must be closed
under taking divisors. When omitted, ``max_order = n`` keeps every monomial of
total degree ``<= n`` (default 1). The flag ``[time_dependent]`` marks a
parameter (or ``omega``) that varies slowly in time.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .series import Monomial, format_monomial, mono_degree, mono_from, mono_mul

OMEGA = "omega"
STATE_VARS = ("y", "ydot")


class ModelError(ValueError):
    """Invalid model definition."""


class ParseError(ModelError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# --------------------------------------------------------------- polynomials

Poly = dict[Monomial, Fraction]


def _padd(a: Poly, b: Poly, sign: int = 1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) + sign * v
    return {k: v for k, v in out.items() if v}


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for (k1, v1), (k2, v2) in itertools.product(a.items(), b.items()):
        k = mono_mul(k1, k2)
        out[k] = out.get(k, Fraction(0)) + v1 * v2
    return {k: v for k, v in out.items() if v}


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")


class _ExprParser:
    """Recursive-descent parser for polynomial expressions with exact literals."""

    def __init__(self, text: str, line: int = 1, col0: int = 1):
        self.text = text
        self.line = line
        self.col0 = col0
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                self.error("unexpected character", pos + len(text[pos:]) - len(text[pos:].lstrip()))
            num, name, op = m.groups()
            start = m.start(m.lastindex)
            if num is not None:
                self.tokens.append(("num", num, start))
            elif name is not None:
                self.tokens.append(("name", name, start))
            else:
                self.tokens.append(("op", "^" if op == "**" else op, start))
            pos = m.end()
        self.i = 0

    def error(self, message: str, pos: int):
        raise ParseError(message, self.line, self.col0 + pos)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "", len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> Poly:
        if not self.tokens:
            return {}
        out = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            self.error(f"unexpected {val!r}", pos)
        return out

    def expr(self) -> Poly:
        out = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            _, op, _ = self.take()
            out = _padd(out, self.term(), 1 if op == "+" else -1)
        return out

    def term(self) -> Poly:
        out = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                out = _pmul(out, rhs)
            else:
                if set(rhs) - {()} or not rhs:
                    self.error("division only by nonzero numeric constants", pos)
                out = {k: v / rhs[()] for k, v in out.items()}
        return out

    def unary(self) -> Poly:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return {k: -v for k, v in self.unary().items()}
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                self.error("exponent must be a non-negative integer literal", pos)
            out: Poly = {(): Fraction(1)}
            for _ in range(int(val)):
                out = _pmul(out, base)
            return out
        return base

    def atom(self) -> Poly:
        kind, val, pos = self.take()
        if kind == "num":
            return {(): Fraction(val)} if Fraction(val) else {}
        if kind == "name":
            return {((val, 1),): Fraction(1)}
        if (kind, val) == ("op", "("):
            out = self.expr()
            k2, v2, p2 = self.take()
            if (k2, v2) != ("op", ")"):
                self.error("expected ')'", p2)
            return out
        self.error(f"unexpected {val or 'end of input'!r}", pos)


def parse_polynomial(text: str, line: int = 1, column: int = 1) -> Poly:
    return _ExprParser(text, line, column).parse()


# -------------------------------------------------------------------- model

@dataclass(frozen=True)
class Parameter:
    name: str
    value: float | None = None
    time_dependent: bool = False


@dataclass(frozen=True)
class ModelSpec:
    """Oscillator with polynomial nonlinearity linear in the small parameters.

    ``nonlinearity`` maps a parameter name to ``{(a, b): c}`` meaning
    ``c * y^a * ydot^b``.
    """

    params: tuple[Parameter, ...]
    nonlinearity: dict[str, dict[tuple[int, int], Fraction]]
    orders: tuple[Monomial, ...]
    omega: float | None = None
    omega_time_dependent: bool = False
    vdp_omega_iteration: bool = False
    name: str = "model"
    _source: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ModelError("duplicate parameter names")
        for n in names:
            if n in STATE_VARS or n == OMEGA or n == "t":
                raise ModelError(f"reserved name {n!r} used as a parameter")
        for pname, poly in self.nonlinearity.items():
            if pname not in names:
                raise ModelError(f"nonlinearity uses undeclared parameter {pname!r}")
            for (a, b) in poly:
                if a < 0 or b < 0:
                    raise ModelError("negative powers in nonlinearity")
        if not self.orders:
            raise ModelError("order lattice is empty (max_order must be >= 1)")
        lattice = set(self.orders)
        for m in self.orders:
            if mono_degree(m) < 1:
                raise ModelError("orders must have total degree >= 1")
            for name, n in m:
                if name not in names:
                    raise ModelError(f"order {format_monomial(m)} uses unknown parameter {name!r}")
            for name, _ in m:
                lower = mono_from([(k, v - (k == name)) for k, v in m])
                if lower and lower not in lattice:
                    raise ModelError(
                        f"order lattice is not closed: {format_monomial(m)} needs {format_monomial(lower)}"
                    )

    # -------------------------------------------------------- conveniences
    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def max_order(self) -> int:
        return max(mono_degree(m) for m in self.orders)

    @property
    def time_dependent(self) -> dict[str, bool]:
        flags = {p.name: p.time_dependent for p in self.params}
        flags[OMEGA] = self.omega_time_dependent
        return flags

    def values(self) -> dict[str, float]:
        out = {p.name: p.value for p in self.params if p.value is not None}
        if self.omega is not None:
            out[OMEGA] = self.omega
        return out

    def is_van_der_pol(self) -> bool:
        """True when the nonlinearity is exactly ``eps*(1 - y^2)*ydot`` for one parameter."""
        active = {k: v for k, v in self.nonlinearity.items() if v}
        if len(active) != 1:
            return False
        (poly,) = active.values()
        return poly == {(0, 1): Fraction(1), (2, 1): Fraction(-1)}

    def with_values(self, **values: float) -> ModelSpec:
        params = tuple(
            Parameter(p.name, values.get(p.name, p.value), p.time_dependent) for p in self.params
        )
        return ModelSpec(params, self.nonlinearity, self.orders, values.get(OMEGA, self.omega),
                         self.omega_time_dependent, self.vdp_omega_iteration, self.name)

    # ------------------------------------------------------------- text io
    def nonlinearity_text(self) -> str:
        chunks = []
        for pname in self.param_names:
            for (a, b), c in sorted(self.nonlinearity.get(pname, {}).items()):
                factors = [pname]
                if a:
                    factors.append("y" if a == 1 else f"y^{a}")
                if b:
                    factors.append("ydot" if b == 1 else f"ydot^{b}")
                mag = abs(c)
                lead = "" if mag == 1 else f"{mag}*"
                body = lead + "*".join(factors)
                if not chunks:
                    chunks.append(("-" if c < 0 else "") + body)
                else:
                    chunks.append(("- " if c < 0 else "+ ") + body)
        return " ".join(chunks) if chunks else "0"

    def to_text(self) -> str:
        lines = [f"name = {self.name}"]
        flag = " [time_dependent]" if self.omega_time_dependent else ""
        if self.omega is not None:
            lines.append(f"omega = {self.omega!r}{flag}")
        elif flag:
            lines.append(f"omega = symbolic{flag}")
        for p in self.params:
            val = "symbolic" if p.value is None else repr(p.value)
            lines.append(f"param {p.name} = {val}" + (" [time_dependent]" if p.time_dependent else ""))
        lines.append(f"nonlinearity = {self.nonlinearity_text()}")
        lines.append("orders = " + ", ".join(format_monomial(m) for m in self.orders))
        if self.vdp_omega_iteration:
            lines.append("vdp_omega_iteration = true")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> ModelSpec:
        return parse_model(text)

    @classmethod
    def load(cls, path: str | Path) -> ModelSpec:
        return parse_model(Path(path).read_text())


_FLAG = re.compile(r"\[\s*(\w+)\s*\]\s*$")


def _split_value(raw: str, line: int, col: int) -> tuple[str, bool]:
    flagged = False
    m = _FLAG.search(raw)
    if m:
        if m.group(1) != "time_dependent":
            raise ParseError(f"unknown flag [{m.group(1)}]", line, col + m.start())
        flagged = True
        raw = raw[: m.start()]
    return raw.strip(), flagged


def _number(text: str, line: int, col: int) -> float | None:
    if text in ("", "symbolic"):
        return None
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"expected a number, got {text!r}", line, col) from None


def parse_model(text: str) -> ModelSpec:
    params: list[Parameter] = []
    name = "model"
    omega = None
    omega_td = False
    nl_src = None
    orders_src = None
    max_order = None
    vdp_iter = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, len(line) - len(line.lstrip()) + 1)
        lhs, rhs = line.split("=", 1)
        vcol = len(lhs) + 2 + (len(rhs) - len(rhs.lstrip()))
        key = lhs.split()
        value, flagged = _split_value(rhs.strip(), lineno, vcol)
        if not key:
            raise ParseError("missing key", lineno, 1)
        if key[0] == "param":
            if len(key) != 2 or not re.fullmatch(r"[A-Za-z_]\w*", key[1]):
                raise ParseError("expected 'param <name> = <value>'", lineno, 1)
            params.append(Parameter(key[1], _number(value, lineno, vcol), flagged))
            continue
        if len(key) != 1:
            raise ParseError(f"unknown key {' '.join(key)!r}", lineno, 1)
        k = key[0]
        if flagged and k != OMEGA:
            raise ParseError(f"[time_dependent] not allowed on {k!r}", lineno, vcol)
        if k == "name":
            name = value
        elif k == OMEGA:
            omega, omega_td = _number(value, lineno, vcol), flagged
        elif k == "nonlinearity":
            nl_src = (value, lineno, vcol)
        elif k == "orders":
            orders_src = (value, lineno, vcol)
        elif k == "max_order":
            if not value.isdigit():
                raise ParseError("max_order must be a positive integer", lineno, vcol)
            max_order = int(value)
        elif k == "vdp_omega_iteration":
            if value.lower() not in ("true", "false", "yes", "no", "1", "0"):
                raise ParseError("expected a boolean", lineno, vcol)
            vdp_iter = value.lower() in ("true", "yes", "1")
        else:
            raise ParseError(f"unknown key {k!r}", lineno, 1)

    names = [p.name for p in params]
    nonlinearity: dict[str, dict[tuple[int, int], Fraction]] = {}
    if nl_src is not None:
        src, lineno, col = nl_src
        poly = parse_polynomial(src, lineno, col)
        for monomial, c in poly.items():
            powers = dict(monomial)
            a = powers.pop("y", 0)
            b = powers.pop("ydot", 0)
            unknown = [v for v in powers if v not in names]
            if unknown:
                raise ParseError(f"unknown symbol {unknown[0]!r} in nonlinearity", lineno, col)
            if sum(powers.values()) != 1:
                raise ParseError(
                    "each nonlinearity monomial must contain exactly one parameter to the first power",
                    lineno, col,
                )
            (pname,) = powers
            nonlinearity.setdefault(pname, {})[(a, b)] = c

    if orders_src is not None:
        src, lineno, col = orders_src
        orders = []
        for chunk in src.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            poly = parse_polynomial(chunk, lineno, col)
            if len(poly) != 1 or next(iter(poly.values())) != 1:
                raise ParseError(f"order {chunk!r} is not a monomial", lineno, col)
            (m,) = poly
            for v, _ in m:
                if v.endswith("dot") and v[:-3] in names + [OMEGA]:
                    raise ParseError(
                        f"rate orders are implied by [time_dependent]; {chunk!r} not allowed", lineno, col
                    )
            orders.append(m)
    else:
        n = 1 if max_order is None else max_order
        if n < 1:
            raise ModelError("max_order must be >= 1")
        orders = [
            mono_from(dict(zip(names, c)))
            for d in range(1, n + 1)
            for c in itertools.product(range(d + 1), repeat=len(names))
            if sum(c) == d
        ]
    return ModelSpec(tuple(params), nonlinearity, tuple(dict.fromkeys(orders)), omega, omega_td,
                     vdp_iter, name, text)


# ------------------------------------------------------------------ builtins

VDP_TEXT = """\
# Van der Pol oscillator, expansion to second order in mu
name = vdp
omega = 2.0 [time_dependent]
param mu = 0.1 [time_dependent]
nonlinearity = mu*(1 - y^2)*ydot
orders = mu, mu^2
vdp_omega_iteration = true
"""

VDPD_TEXT = """\
# Van der Pol-Duffing oscillator, orders mu, beta and mu*beta
name = vdpd
omega = 1.0
param mu = 0.01 [time_dependent]
param beta = 0.005 [time_dependent]
nonlinearity = mu*(1 - y^2)*ydot - beta*y^3
orders = mu, beta, mu*beta
"""


def van_der_pol(**values: float) -> ModelSpec:
    return parse_model(VDP_TEXT).with_values(**values)


def van_der_pol_duffing(**values: float) -> ModelSpec:
    return parse_model(VDPD_TEXT).with_values(**values)
