"""Parameter schedules and closed-loop protocols in parameter space."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

OMEGA = "omega"


@dataclass(frozen=True)
class Schedule:
    """Parameters ``p(t) = center + cos_amp*cos(k s) + sin_amp*sin(k s)``.

    ``s = clip(t - t0, 0, duration)`` and ``k = 2*pi*cycles/duration``, so the
    parameters are frozen before ``t0`` and after ``t0 + duration``.
    """

    names: tuple[str, ...]
    center: tuple[float, ...]
    cos_amp: tuple[float, ...]
    sin_amp: tuple[float, ...]
    t0: float = 0.0
    duration: float = 1.0
    cycles: float = 1.0

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.center) == len(self.cos_amp) == len(self.sin_amp) == n):
            raise ValueError("schedule arrays must match names")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @classmethod
    def constant(cls, values: Mapping[str, float]) -> Schedule:
        names = tuple(values)
        zeros = (0.0,) * len(names)
        return cls(names, tuple(float(values[n]) for n in names), zeros, zeros)

    @classmethod
    def ramp(cls, values: Mapping[str, float], name: str, end: float, t0: float,
             duration: float) -> Schedule:
        """Half-cosine ramp of one parameter from its value in ``values`` to ``end``."""
        names = tuple(values)
        start = float(values[name])
        center = [float(values[n]) for n in names]
        cos_amp = [0.0] * len(names)
        i = names.index(name)
        center[i] = 0.5 * (start + end)
        cos_amp[i] = 0.5 * (start - end)
        return cls(names, tuple(center), tuple(cos_amp), (0.0,) * len(names), t0, duration, 0.5)

    @property
    def kappa(self) -> float:
        return 2 * math.pi * self.cycles / self.duration

    @property
    def breakpoints(self) -> tuple[float, float]:
        return self.t0, self.t0 + self.duration

    def _phase(self, t):
        s = np.clip(np.asarray(t, dtype=float) - self.t0, 0.0, self.duration)
        return self.kappa * s

    def values(self, t) -> dict[str, float]:
        ph = self._phase(t)
        c, s = np.cos(ph), np.sin(ph)
        return {n: self.center[i] + self.cos_amp[i] * c + self.sin_amp[i] * s
                for i, n in enumerate(self.names)}

    def rates(self, t) -> dict[str, float]:
        t = np.asarray(t, dtype=float)
        inside = (t > self.t0) & (t < self.t0 + self.duration)
        ph = self._phase(t)
        k = self.kappa
        return {n: np.where(inside, k * (-self.cos_amp[i] * np.sin(ph) + self.sin_amp[i] * np.cos(ph)), 0.0)
                for i, n in enumerate(self.names)}

    def arrays(self, order: Sequence[str]):
        idx = [self.names.index(n) for n in order]
        pick = lambda seq: np.array([seq[i] for i in idx], dtype=float)
        return pick(self.center), pick(self.cos_amp), pick(self.sin_amp)


@dataclass(frozen=True)
class CycleProtocol:
    """Elliptic loop in the plane of two parameters.

    ``base`` holds every parameter (and ``omega``) at the start and end of the
    loop. With ``(p1, p2) = loop`` the schedule is::

        p1(t) = base[p1] + radii[0] * (cos(2 pi s / T) - 1)
        p2(t) = base[p2] + orientation * radii[1] * sin(2 pi s / T)

    for ``s = t - t_start`` in ``[0, T]``, so the loop center sits at
    ``base[p1] - radii[0]``. ``relax`` and ``settle`` are the waits before and
    after the loop in units of ``1/base[rate_param]``.
    """

    loop: tuple[str, str]
    base: Mapping[str, float]
    radii: tuple[float, float]
    T: float
    orientation: int = 1
    relax: float = 10.0
    settle: float = 10.0
    rate_param: str | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "loop", tuple(self.loop))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "base", {k: float(v) for k, v in self.base.items()})
        if len(self.loop) != 2 or self.loop[0] == self.loop[1]:
            raise ValueError("a loop needs two distinct parameters")
        for name in self.loop:
            if name not in self.base:
                raise ValueError(f"loop parameter {name!r} missing from base point")
        if OMEGA not in self.base:
            raise ValueError("base point must include omega")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if min(self.radii) < 0:
            raise ValueError("radii must be non-negative")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.relax < 10 or self.settle < 0:
            raise ValueError("relax must be at least 10 relaxation times")
        if self.rate_param is None:
            object.__setattr__(self, "rate_param", self.loop[0])
        if self.base[self.rate_param] <= 0:
            raise ValueError("rate parameter must be positive")

    @property
    def center(self) -> dict[str, float]:
        out = dict(self.base)
        out[self.loop[0]] -= self.radii[0]
        return out

    @property
    def omega0(self) -> float:
        return self.base[OMEGA]

    @property
    def relax_time(self) -> float:
        return self.relax / self.base[self.rate_param]

    @property
    def settle_time(self) -> float:
        return self.settle / self.base[self.rate_param]

    @property
    def t_start(self) -> float:
        return self.relax_time

    @property
    def t_end(self) -> float:
        return self.relax_time + self.T

    @property
    def t_measure(self) -> float:
        return self.t_end + self.settle_time

    @property
    def area(self) -> float:
        return math.pi * self.radii[0] * self.radii[1]

    def schedule(self, orientation: int | None = None) -> Schedule:
        o = self.orientation if orientation is None else orientation
        names = tuple(self.base)
        center = dict(self.center)
        cos_amp = {n: 0.0 for n in names}
        sin_amp = {n: 0.0 for n in names}
        cos_amp[self.loop[0]] = self.radii[0]
        sin_amp[self.loop[1]] = o * self.radii[1]
        return Schedule(names, tuple(center[n] for n in names), tuple(cos_amp[n] for n in names),
                        tuple(sin_amp[n] for n in names), self.t_start, self.T, 1.0)

    def reversed(self) -> CycleProtocol:
        return self.replace(orientation=-self.orientation)

    def replace(self, **changes) -> CycleProtocol:
        data = self.to_dict()
        data.update(changes)
        return CycleProtocol.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loop"] = list(self.loop)
        d["radii"] = list(self.radii)
        d["base"] = dict(self.base)
        d["extra"] = dict(self.extra)
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> CycleProtocol:
        data = dict(data)
        known = {"loop", "base", "radii", "T", "orientation", "relax", "settle", "rate_param", "extra"}
        extra = dict(data.pop("extra", {}) or {})
        for k in list(data):
            if k not in known:
                extra[k] = data.pop(k)
        return cls(extra=extra, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> CycleProtocol:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
