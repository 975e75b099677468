"""Command line front end: ``rgwb {derive,curvature,simulate,validate,run}``.

Model arguments take a model file or the name of a bundled model (``vdp``,
``vdpd``); protocol arguments take a JSON file or a bundled protocol name
(``vdp_loop``, ``vdpd_loop``). ``RGWB_THREADS`` caps the sweep pool.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import golden
from .derivation import derive
from .geometry import GeometryError, curvature, predicted_loop_phase
from .model import ModelError, ModelSpec
from .protocol import CycleProtocol
from .simulator import (
    SimulationError,
    flow_loop_phase,
    run_cycle_pair,
    sweep_csv,
    sweep_T,
)

DEFAULT_TOL = 1e-11


def _bundled(name: str, suffix: str) -> Path | None:
    res = resources.files("rgwb") / "data" / f"{name}{suffix}"
    return Path(str(res)) if res.is_file() else None


def load_model(ref: str) -> ModelSpec:
    path = Path(ref)
    if not path.exists():
        path = _bundled(ref, ".model") or path
    return ModelSpec.load(path)


def load_protocol(ref: str) -> CycleProtocol:
    path = Path(ref)
    if not path.exists():
        path = _bundled(ref, ".json") or path
    return CycleProtocol.load(path)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------- derive

def cmd_derive(args) -> int:
    model = load_model(args.model)
    d = derive(model)
    if args.json:
        text = _dump({
            "model": model.name,
            "orders": [dict(o) for o in model.orders],
            "flow": d.flow.to_json(),
            "polar": d.polar.to_json(),
            "text": {"flow": d.flow.to_text(), "polar": d.polar.to_text(),
                     "renormalized": d.renormalized.to_text()},
        })
    else:
        lines = [f"# model {model.name}", d.flow.to_text(), d.polar.to_text(), d.renormalized.to_text()]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    if args.golden:
        if model.name not in golden.TABLES:
            print(f"no reference table for model {model.name!r}", file=sys.stderr)
            return 2
        diffs = golden.compare(model.name, d)
        for line in diffs:
            print(line, file=sys.stderr)
        print(f"golden {model.name}: {'FAIL' if diffs else 'PASS'}", file=sys.stderr)
        return 1 if diffs else 0
    return 0


# ------------------------------------------------------------ curvature

def _point(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, _, value = item.partition("=")
        if not _:
            raise argparse.ArgumentTypeError(f"expected name=value, got {item!r}")
        out[name.strip()] = float(value)
    return out


def cmd_curvature(args) -> int:
    model = load_model(args.model)
    point = model.values()
    if args.at:
        point.update(args.at)
    loop = tuple(args.loop.split(",")) if args.loop else _default_loop(model)
    sys_ = derive(model).polar.with_loop(*loop)
    sample = curvature(sys_, point, h=args.h, singular_only=args.singular_only)
    record = sample.to_json()
    record["singular_only"] = bool(args.singular_only)
    _emit(_dump(record), args.out)
    return 0


def _default_loop(model: ModelSpec) -> tuple[str, str]:
    names = [n for n, td in model.time_dependent.items() if td]
    if len(names) != 2:
        raise SystemExit("pass --loop p1,p2: the model does not single out two time-dependent parameters")
    return tuple(names)


# ------------------------------------------------------------- simulate

def _orientations(choice: str, proto: CycleProtocol) -> list[CycleProtocol]:
    if choice == "ccw":
        return [proto.replace(orientation=1)]
    if choice == "cw":
        return [proto.replace(orientation=-1)]
    return [proto.replace(orientation=1), proto.replace(orientation=-1)]


def _prediction(model, proto, singular_only):
    sys_ = derive(model).polar.with_loop(*proto.loop)
    return predicted_loop_phase(sys_, proto, singular_only=singular_only)


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    base = load_protocol(args.protocol)
    T_list = args.T or [base.T]
    chunks = []
    plot = []
    failed = False
    for proto in _orientations(args.orientation, base):
        pred = _prediction(model, proto, args.singular_only)
        results = sweep_T(model, proto, sorted(T_list), tol=args.tol, predicted=pred)
        text = sweep_csv(results)
        chunks.append(text if not chunks else text.split("\n", 1)[1])
        for r in results:
            if r.error:
                failed = True
                print(f"T={r.T}: {r.error}", file=sys.stderr)
            elif r.measurement:
                plot.append(f"{r.T!r} {r.measurement.theta!r}")
    _emit("".join(chunks), args.out)
    if args.plot_data:
        Path(args.plot_data).write_text("\n".join(plot) + "\n")
    return 1 if failed else 0


# ------------------------------------------------------------- validate

def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def validate(model: ModelSpec, proto: CycleProtocol, tol: float = DEFAULT_TOL, rel_tol: float = 0.1,
             plateau_tol: float = 0.05, singular_only: bool = False) -> tuple[bool, dict]:
    """Compare simulated, flow and predicted loop phases; also check the plateau in ``T``."""
    sys_ = derive(model).polar.with_loop(*proto.loop)
    pred = predicted_loop_phase(sys_, proto, singular_only=singular_only)
    flow = flow_loop_phase(sys_, proto)
    sim = run_cycle_pair(model, proto, tol).theta
    half = run_cycle_pair(model, proto.replace(T=proto.T / 2), tol).theta
    report = {"T": proto.T, "omega0T": proto.omega0 * proto.T, "theta_sim": float(sim),
              "theta_flow": float(flow), "theta_pred": float(pred), "theta_sim_half_T": float(half), "rel_tol": rel_tol,
              "plateau_tol": plateau_tol, "pairs": {}, "diagnostics": []}
    ok = True
    for name, a, b in (("sim-pred", sim, pred), ("sim-flow", sim, flow), ("flow-pred", flow, pred)):
        err = float(_rel(a, b))
        passed = bool(err <= rel_tol)
        report["pairs"][name] = {"rel_err": err, "pass": passed}
        if not passed:
            ok = False
            report["diagnostics"].append(f"{name}: relative difference {err:.3g} exceeds {rel_tol}")
    drift = float(_rel(sim, half))
    report["plateau_rel_change"] = drift
    if drift > plateau_tol:
        ok = False
        report["diagnostics"].append(
            f"not at plateau: theta changes by {drift:.3g} between T/2 and T (limit {plateau_tol})")
    report["pass"] = ok
    return ok, report


def cmd_validate(args) -> int:
    model = load_model(args.model)
    proto = load_protocol(args.protocol)
    if args.T:
        proto = proto.replace(T=args.T[-1])
    ok, report = validate(model, proto, args.tol, args.rel_tol, args.plateau_tol, args.singular_only)
    _emit(_dump(report), args.out)
    for line in report["diagnostics"]:
        print(line, file=sys.stderr)
    print(f"validate: {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    return 0 if ok else 1


# ------------------------------------------------------------- manifests

@dataclass(frozen=True)
class ExperimentManifest:
    """One reproducible CLI invocation stored as JSON."""

    command: str
    model: str
    protocol: str | None = None
    out: str | None = None
    options: dict = field(default_factory=dict)

    COMMANDS = ("derive", "curvature", "simulate", "validate")

    def __post_init__(self):
        if self.command not in self.COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")

    def to_json(self) -> str:
        data = {"command": self.command, "model": self.model, "protocol": self.protocol,
                "out": self.out, "options": self.options}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ExperimentManifest:
        data = json.loads(text)
        unknown = set(data) - {"command", "model", "protocol", "out", "options"}
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(data["command"], data["model"], data.get("protocol"), data.get("out"),
                   dict(data.get("options") or {}))

    def argv(self) -> list[str]:
        argv = [self.command, "--model", self.model]
        if self.protocol:
            argv += ["--protocol", self.protocol]
        if self.out:
            argv += ["--out", self.out]
        for key, value in sorted(self.options.items()):
            flag = "--" + key.replace("_", "-")
            if value is True:
                argv.append(flag)
            elif value is False or value is None:
                continue
            elif isinstance(value, list):
                argv += [flag] + [str(v) for v in value]
            else:
                argv += [flag, str(value)]
        return argv


def cmd_run(args) -> int:
    manifest = ExperimentManifest.from_json(Path(args.manifest).read_text())
    return main(manifest.argv())


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rgwb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", help="print the RG equations of a model")
    d.add_argument("model_pos", nargs="?", metavar="MODEL")
    d.add_argument("--model")
    d.add_argument("--json", action="store_true", help="emit JSON instead of text")
    d.add_argument("--golden", action="store_true", help="diff against the built-in reference tables")
    d.add_argument("--out")
    d.set_defaults(func=cmd_derive)

    c = sub.add_parser("curvature", help="connection and curvature at a parameter point")
    c.add_argument("model_pos", nargs="?", metavar="MODEL")
    c.add_argument("--model")
    c.add_argument("--at", type=_point, help="parameter values, e.g. mu=0.1,omega=2")
    c.add_argument("--loop", help="the two loop parameters, e.g. mu,omega")
    c.add_argument("--h", type=float, default=1e-4, help="relative finite-difference step")
    c.add_argument("--singular-only", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_curvature)

    for name, func, helptext in (("simulate", cmd_simulate, "measure loop phases by direct simulation"),
                                 ("validate", cmd_validate, "compare simulation, RG flow and prediction")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--model", required=True)
        s.add_argument("--protocol", required=True)
        s.add_argument("--tol", type=float, default=DEFAULT_TOL)
        s.add_argument("--T", type=float, nargs="+", help="loop durations (overrides the protocol)")
        s.add_argument("--singular-only", action="store_true", help="singular-part prediction")
        s.add_argument("--out")
        s.set_defaults(func=func)
        if name == "simulate":
            s.add_argument("--orientation", choices=("ccw", "cw", "both"), default="ccw")
            s.add_argument("--plot-data", help="write 'T theta' columns here")
        else:
            s.add_argument("--rel-tol", type=float, default=0.1)
            s.add_argument("--plateau-tol", type=float, default=0.05)

    r = sub.add_parser("run", help="execute an experiment manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_run)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "model_pos"):
        args.model = args.model or args.model_pos
        if not args.model:
            build_parser().error("a model is required")
    try:
        return args.func(args)
    except (ModelError, GeometryError, SimulationError, ValueError, OSError) as exc:
        print(f"rgwb: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
