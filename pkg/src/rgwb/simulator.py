"""Direct integration of the oscillator and the two-orientation phase measurement.

The oscillator ``y'' + w(t)^2 y = sum_i eps_i(t) f_i(y, ydot)`` is integrated
with a compiled DOP853 (``rgwb._dop853``). A loop measurement runs the same
protocol counterclockwise and clockwise, finds the same upward zero crossing
of ``y`` after the loop in both runs and converts the time offset into a phase.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import _dop853
from .model import ModelSpec
from .polar import PolarRGSystem
from .protocol import OMEGA, CycleProtocol, Schedule

CSV_COLUMNS = ("T", "omega0T", "theta_plus_run_crossing", "t_plus", "t_minus", "theta",
               "theta_geom_pred", "rel_err")
_STEP_ROW = 18
_MAX_STEPS = 50_000_000


class SimulationError(RuntimeError):
    pass


class StepUnderflow(SimulationError):
    pass


class CrossingMismatch(SimulationError):
    pass


def _check_tol(tol: float) -> None:
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-13, 1e-6], got {tol}")


def complete_schedule(model: ModelSpec, schedule: Schedule | None) -> Schedule:
    """Add constant entries for model parameters (and ``omega``) the schedule leaves out."""
    values = model.values()
    if schedule is None:
        return Schedule.constant(values)
    names = list(schedule.names)
    center, ca, sa = list(schedule.center), list(schedule.cos_amp), list(schedule.sin_amp)
    for name, v in values.items():
        if name not in names:
            if v is None:
                raise ValueError(f"no value for {name!r}")
            names.append(name)
            center.append(float(v))
            ca.append(0.0)
            sa.append(0.0)
    return Schedule(tuple(names), tuple(center), tuple(ca), tuple(sa), schedule.t0,
                    schedule.duration, schedule.cycles)


class _Compiled:
    """Array form of a model and schedule for the kernel."""

    def __init__(self, model: ModelSpec, schedule: Schedule):
        self.schedule = schedule
        names = schedule.names
        self.iomega = names.index(OMEGA)
        rows = [(names.index(p), a, b, float(c))
                for p, poly in model.nonlinearity.items() for (a, b), c in sorted(poly.items()) if c]
        self.pidx = np.array([r[0] for r in rows], dtype=np.int64)
        self.ypow = np.array([r[1] for r in rows], dtype=np.int64)
        self.vpow = np.array([r[2] for r in rows], dtype=np.int64)
        self.coef = np.array([r[3] for r in rows], dtype=np.float64)
        center, ca, sa = (np.array(x, dtype=np.float64)
                          for x in (schedule.center, schedule.cos_amp, schedule.sin_amp))
        self.sched = (center, ca, sa, float(schedule.t0), float(schedule.duration), float(schedule.kappa))

    def run(self, ta, tb, y, h, tol, rec_from=math.inf, record=False, dense=False, chunk=65536):
        """Integrate ``[ta, tb]``; returns ``(y, h, n_up, crossing_times, step_rows)``."""
        t = float(ta)
        y = np.asarray(y, dtype=np.float64)
        n_total = 0
        recs, rows = [], []
        while True:
            rec = np.empty(chunk if record else 0)
            steps = np.empty((chunk if dense else 0, _STEP_ROW))
            t, y, h, n_up, got, n_steps, status = _dop853.integrate_segment(
                t, float(tb), y, float(h), tol, tol, self.sched, self.iomega, self.pidx, self.ypow,
                self.vpow, self.coef, float(rec_from) if record else math.inf, rec, steps, _MAX_STEPS)
            n_total += n_up
            recs.append(rec[:got])
            rows.append(steps[:n_steps])
            if status == _dop853.UNDERFLOW:
                raise StepUnderflow(f"step size underflow at t = {t} in [{ta}, {tb}]")
            if status == _dop853.MAX_STEPS:
                raise SimulationError(f"more than {_MAX_STEPS} steps in [{ta}, {tb}]")
            if status == _dop853.OK:
                break
        return y, h, n_total, np.concatenate(recs), np.vstack(rows)


def _segments(t_span, cuts):
    t0, t1 = t_span
    pts = [t0] + sorted(c for c in cuts if t0 < c < t1) + [t1]
    return list(zip(pts[:-1], pts[1:]))


@dataclass
class Trajectory:
    """Accepted steps with their DOP853 interpolants; call it to evaluate ``(y, ydot)``."""

    t: np.ndarray
    state: np.ndarray
    steps: np.ndarray | None = None
    crossings: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __call__(self, t):
        if self.steps is None:
            raise ValueError("trajectory was integrated without dense output")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        st = self.steps
        idx = np.clip(np.searchsorted(st[:, 0], t, side="right") - 1, 0, len(st) - 1)
        row = st[idx]
        x = (t - row[:, 0]) / row[:, 1]
        out = np.empty((2, t.size))
        for comp in range(2):
            val = np.zeros(t.size)
            for i in range(7):
                val = val + row[:, 4 + 2 * (6 - i) + comp]
                val = val * (x if i % 2 == 0 else 1.0 - x)
            out[comp] = val + row[:, 2 + comp]
        return out

    def energy(self, omega: float | np.ndarray):
        return 0.5 * (self.state[:, 1] ** 2 + np.asarray(omega) ** 2 * self.state[:, 0] ** 2)


def integrate(model: ModelSpec, schedule: Schedule | None, t_span: tuple[float, float],
              tol: float = 1e-11, y0: Sequence[float] = (2.0, 0.0), dense: bool = True) -> Trajectory:
    """Integrate from ``t_span[0]`` with ``(y, ydot) = y0``.

    Step endpoints are returned; with ``dense`` the per-step interpolants are
    kept so the trajectory can be evaluated anywhere, and ``crossings`` holds
    all upward zero crossings of ``y`` polished on the interpolant.
    """
    _check_tol(tol)
    sched = complete_schedule(model, schedule)
    comp = _Compiled(model, sched)
    y = np.asarray(y0, dtype=np.float64)
    h = 1e-2 / max(abs(sched.values(t_span[0])[OMEGA]), 1e-300)
    ts, states, steps, crossings = [t_span[0]], [y.copy()], [], []
    for ta, tb in _segments(t_span, sched.breakpoints):
        y, h, _, rec, st = comp.run(ta, tb, y, h, tol, rec_from=ta, record=True, dense=dense)
        crossings.append(rec)
        if dense:
            steps.append(st)
            ts.extend(st[1:, 0])
            states.extend(st[1:, 2:4])
        ts.append(tb)
        states.append(y.copy())
    return Trajectory(np.array(ts), np.array(states), np.vstack(steps) if dense else None,
                      np.concatenate(crossings))


# ---------------------------------------------------------------- loops

@dataclass(frozen=True)
class _Run:
    first_index: int
    times: np.ndarray


def _loop_run(model: ModelSpec, proto: CycleProtocol, orientation: int, tol: float, y0) -> _Run:
    sched = complete_schedule(model, proto.schedule(orientation))
    comp = _Compiled(model, sched)
    period = 2 * math.pi / proto.omega0
    window = 3 * period
    t_stop = proto.t_measure + window
    y = np.asarray(y0, dtype=np.float64)
    h = 1e-2 / proto.omega0
    y, h, _, _, _ = comp.run(0.0, proto.t_start, y, h, tol)
    y, h, n_loop, _, _ = comp.run(proto.t_start, proto.t_end, y, h, tol)
    _, _, n_tail, rec, _ = comp.run(proto.t_end, t_stop, y, h, tol,
                                    rec_from=proto.t_measure - window, record=True)
    first = n_loop + n_tail - len(rec) + 1
    return _Run(first, rec)


@dataclass(frozen=True)
class PhaseMeasurement:
    """Phase from a loop run in both orientations.

    ``t_plus``/``t_minus`` are the crossing times of the runs with the
    protocol's own orientation and its reverse; ``crossing_index`` counts
    upward zero crossings from the loop start.
    """

    t_plus: float
    t_minus: float
    crossing_index: int
    theta: float
    T: float
    omega0: float

    @property
    def omega0T(self) -> float:
        return self.omega0 * self.T


def run_cycle_pair(model: ModelSpec, proto: CycleProtocol, tol: float = 1e-11,
                   y0: Sequence[float] = (2.0, 0.0)) -> PhaseMeasurement:
    """``theta = omega0 * (t_minus - t_plus) / 2`` from the two orientations of ``proto``.

    The crossing is the first upward crossing after ``proto.t_measure`` in the
    counterclockwise run; the clockwise run uses the same index, so relabeling
    the orientations negates ``theta`` exactly.
    """
    _check_tol(tol)
    ccw = _loop_run(model, proto, 1, tol, y0)
    cw = _loop_run(model, proto, -1, tol, y0)
    after = np.nonzero(ccw.times >= proto.t_measure)[0]
    if after.size == 0:
        raise CrossingMismatch("no crossing recorded after the measurement time")
    index = ccw.first_index + int(after[0])
    k = index - cw.first_index
    if not 0 <= k < len(cw.times):
        raise CrossingMismatch(f"crossing {index} missing from the clockwise run")
    t_ccw, t_cw = float(ccw.times[after[0]]), float(cw.times[k])
    if abs(t_cw - t_ccw) > math.pi / proto.omega0:
        raise CrossingMismatch(f"runs are {abs(t_cw - t_ccw):.3g} apart at crossing {index}")
    if proto.orientation == 1:
        t_plus, t_minus = t_ccw, t_cw
    else:
        t_plus, t_minus = t_cw, t_ccw
    theta = proto.omega0 * (t_minus - t_plus) / 2
    return PhaseMeasurement(t_plus, t_minus, index, theta, proto.T, proto.omega0)


@dataclass(frozen=True)
class SweepResult:
    T: float
    measurement: PhaseMeasurement | None
    predicted: float | None = None
    error: str | None = None

    @property
    def rel_err(self) -> float:
        if self.measurement is None or not self.predicted:
            return math.nan
        return abs(self.measurement.theta - self.predicted) / abs(self.predicted)


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("RGWB_THREADS", os.cpu_count() or 1))
    return max(1, threads)


def sweep_T(model: ModelSpec, proto: CycleProtocol, T_list: Sequence[float], tol: float = 1e-11,
            predicted: float | None = None, threads: int | None = None) -> list[SweepResult]:
    """``run_cycle_pair`` for each ``T``; failures are recorded per entry, results sorted by ``T``."""
    if any(b < a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be ascending")

    def one(T):
        try:
            return SweepResult(T, run_cycle_pair(model, proto.replace(T=T), tol), predicted)
        except (SimulationError, ValueError) as exc:
            return SweepResult(T, None, predicted, f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=_threads(threads)) as pool:
        results = list(pool.map(one, T_list))
    return sorted(results, key=lambda r: r.T)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def sweep_csv(results: Sequence[SweepResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        m = r.measurement
        if m is None:
            w.writerow([_fmt(r.T), "", "", "", "", "", _fmt(r.predicted), ""])
            continue
        w.writerow([_fmt(r.T), _fmt(m.omega0T), _fmt(m.crossing_index), _fmt(m.t_plus),
                    _fmt(m.t_minus), _fmt(m.theta), _fmt(r.predicted), _fmt(r.rel_err)])
    return buf.getvalue()


# ------------------------------------------------------------- RG flow

@dataclass
class FlowTrajectory:
    sol: object

    def __call__(self, t):
        return self.sol.sol(t)

    @property
    def t(self):
        return self.sol.t

    @property
    def r(self):
        return self.sol.y[0]

    @property
    def theta(self):
        return self.sol.y[1]


def flow_integrate(sys: PolarRGSystem, schedule: Schedule, t_span: tuple[float, float],
                   r0: float = 2.0, theta0: float = 0.0, rtol: float = 1e-12,
                   atol: float = 1e-14) -> FlowTrajectory:
    """Integrate ``(r, theta)`` of the polar flow with scheduled parameters and rates."""
    def rhs(t, u):
        vals = {k: float(v) for k, v in schedule.values(t).items()}
        rates = {k: float(v) for k, v in schedule.rates(t).items()}
        rdot, thdot = sys(u[0], vals, rates)
        return [rdot, thdot]

    pts = [t_span[0]] + sorted(c for c in schedule.breakpoints if t_span[0] < c < t_span[1]) + [t_span[1]]
    u = np.array([r0, theta0], dtype=float)
    sols = []
    for ta, tb in zip(pts[:-1], pts[1:]):
        s = solve_ivp(rhs, (ta, tb), u, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if not s.success:
            raise SimulationError(s.message)
        sols.append(s)
        u = s.y[:, -1]
    return FlowTrajectory(_Joined(sols))


class _Joined:
    """Concatenation of piecewise ``solve_ivp`` results."""

    def __init__(self, sols):
        self.sols = sols
        self.t = np.concatenate([s.t if i == 0 else s.t[1:] for i, s in enumerate(sols)])
        self.y = np.concatenate([s.y if i == 0 else s.y[:, 1:] for i, s in enumerate(sols)], axis=1)
        self.edges = np.array([s.t[-1] for s in sols])

    def sol(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.edges, t, side="left"), 0, len(self.sols) - 1)
        out = np.empty((2, t.size))
        for i in np.unique(idx):
            m = idx == i
            out[:, m] = self.sols[i].sol(t[m])
        return out


def flow_loop_phase(sys: PolarRGSystem, proto: CycleProtocol, r0: float = 2.0, **kw) -> float:
    """Loop phase from the polar flow: ``(theta_+ - theta_-)/2`` at the measurement time."""
    if sys.param_names != proto.loop:
        sys = sys.with_loop(*proto.loop)
    end = {}
    for o in (1, -1):
        traj = flow_integrate(sys, proto.schedule(o), (0.0, proto.t_measure), r0, **kw)
        end[o] = traj.theta[-1]
    return proto.orientation * (end[1] - end[-1]) / 2
