"""Command-line front end.

Exit codes: 0 success, 1 domain error (e.g. a rosette that does not exist),
2 usage error. Errors are written to stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .circular import (
    angular_momentum_residual,
    circular_action,
    circular_orbit,
    solve_angular_momentum,
    solve_angular_momentum_cardano,
)
from .core import DomainError, PhysicalParams, ProblemSpec, in_sigma
from .dynamics import CartState, integrate, periodicity_residual
from .loops import discrete_action
from .morse import conley_zehnder_formula, morse_index
from .rosette import action_spectrum, classify, rosette_action, rosette_orbit, sample_loop
from .varsolver import MinimizeOptions, convergence_study, harmonic_forcing, minimize, suggest_nodes

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _nonzero_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value == 0:
        raise argparse.ArgumentTypeError("winding number must be nonzero")
    return value


def _int_at_least(lo):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        if value < lo:
            raise argparse.ArgumentTypeError(f"must be at least {lo}")
        return value
    return parse


def _nodes_arg(text):
    if text == "auto":
        return text
    return _int_at_least(64)(text)


def parse_potential(text: str, T: float):
    """Parse ``eps=0.01,q=1,phase=0,direction=x`` into a harmonic forcing.

    ``direction`` is ``x``, ``y`` or an angle in radians.
    """
    fields = {"eps": "0", "q": "1", "phase": "0", "direction": "x"}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise UsageError(f"bad potential item {item!r}; expected key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in fields:
            raise UsageError(f"unknown potential key {key!r}")
        fields[key] = value
    try:
        eps = float(fields["eps"])
        q = int(fields["q"])
        phase = float(fields["phase"])
        d = fields["direction"]
        angle = {"x": 0.0, "y": math.pi / 2}.get(d)
        angle = float(d) if angle is None else angle
    except ValueError as exc:
        raise UsageError(f"bad potential value: {exc}")
    return harmonic_forcing(eps, T, q=q, phase=phase, direction=(math.cos(angle), math.sin(angle)))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relkep", description="Periodic orbits of the planar relativistic Kepler problem.")
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--m", type=_positive_float, default=1.0)
    common.add_argument("--c", type=_positive_float, default=1.0)
    common.add_argument("--alpha", type=_positive_float, default=1.0)
    common.add_argument("--output", default=None, help="write to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    spec_args = _Parser(add_help=False)
    spec_args.add_argument("--T", type=_positive_float, required=True)
    spec_args.add_argument("--k", type=_nonzero_int, required=True)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("circular", parents=[common, spec_args], help="circular solution and its action")
    sub.add_parser("classify", parents=[common, spec_args], help="rosette existence thresholds")
    p = sub.add_parser("rosette", parents=[common, spec_args], help="closed-form type (n, k) orbit")
    p.add_argument("--n", type=_int_at_least(1), required=True)
    sub.add_parser("action-spectrum", parents=[common, spec_args], help="action levels of all solutions")
    p = sub.add_parser("morse", parents=[common, spec_args], help="Morse index of the circular solution")
    p.add_argument("--modes", type=_int_at_least(16), default=64)
    p.add_argument("--zero-tol", type=_positive_float, default=1e-8)
    p.add_argument("--method", choices=("lapack", "jacobi"), default="lapack")
    p = sub.add_parser("minimize", parents=[common, spec_args], help="minimize the discrete action")
    p.add_argument("--nodes", type=_nodes_arg, default=512, help="node count, or 'auto' to pick by resolution")
    p.add_argument("--gtol", type=_positive_float, default=1e-8)
    p.add_argument("--max-iter", type=_int_at_least(1), default=20000)
    p.add_argument("--potential", default=None, help="forcing, e.g. 'eps=0.01,q=1,phase=0,direction=x'")
    p.add_argument("--loop-out", default=None, help="write the final loop JSON here instead of inline")
    p.add_argument("--study", type=_int_at_least(0), default=0,
                   help="also rerun on this many successively doubled grids")
    p = sub.add_parser("integrate", parents=[common, spec_args], help="integrate a closed-form orbit")
    p.add_argument("--n", type=_int_at_least(0), default=0, help="0 for the circular orbit")
    p.add_argument("--periods", type=_positive_float, default=1.0)
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p = sub.add_parser("verify", parents=[common, spec_args], help="run all cross-checks")
    p.add_argument("--nodes", type=_nodes_arg, default="auto")
    p.add_argument("--modes", type=_int_at_least(16), default=64)
    p = sub.add_parser("sweep", parents=[common], help="classification and Morse index over a range of T")
    p.add_argument("--k", type=_nonzero_int, required=True)
    p.add_argument("--T-min", type=_positive_float, required=True)
    p.add_argument("--T-max", type=_positive_float, required=True)
    p.add_argument("--count", type=_int_at_least(1), default=50)
    p.add_argument("--modes", type=_int_at_least(16), default=64)
    return parser


_OPTION_KEYS = {
    "rosette": ("n",),
    "morse": ("modes", "zero_tol", "method"),
    "minimize": ("nodes", "gtol", "max_iter", "potential", "loop_out", "study"),
    "integrate": ("n", "periods", "tol"),
    "verify": ("nodes", "modes"),
    "sweep": ("T_min", "T_max", "count", "modes"),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: PhysicalParams
    T: float | None = None
    k: int | None = None
    options: dict = field(default_factory=dict)
    output: str | None = None
    format: str | None = None

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        keys = _OPTION_KEYS.get(ns.command, ())
        return cls(
            command=ns.command,
            params=PhysicalParams(ns.m, ns.c, ns.alpha),
            T=getattr(ns, "T", None),
            k=ns.k,
            options={key: getattr(ns, key) for key in keys},
            output=ns.output,
            format=ns.format,
        )

    @classmethod
    def parse(cls, argv) -> "RunConfig":
        return cls.from_namespace(build_parser().parse_args(argv))

    def to_argv(self) -> list:
        argv = [self.command, "--m", repr(self.params.m), "--c", repr(self.params.c),
                "--alpha", repr(self.params.alpha)]
        if self.T is not None:
            argv += ["--T", repr(self.T)]
        if self.k is not None:
            argv += ["--k", str(self.k)]
        for key, value in self.options.items():
            if value is None:
                continue
            flag = "--" + key.replace("_", "-")
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
        if self.output is not None:
            argv += ["--output", self.output]
        if self.format is not None:
            argv += ["--format", self.format]
        return argv

    @property
    def spec(self) -> ProblemSpec:
        return ProblemSpec(self.T, self.k, self.params)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RELKEP_THREADS", "1")))
    except ValueError:
        return 1


def cmd_circular(cfg: RunConfig):
    spec = cfg.spec
    orb = circular_orbit(spec)
    return {"T": spec.T, "k": spec.k, "R": orb.R, "omega": orb.omega, "L": orb.L, "h": orb.h,
            "action": circular_action(spec)}


def cmd_classify(cfg: RunConfig):
    rep = classify(cfg.spec)
    return {"T": cfg.T, "k": cfg.k, "i_T": rep.i_T, "thresholds": rep.rosette_thresholds}


def _rosette_dict(orb):
    return {"T": orb.spec.T, "k": orb.spec.k, "n": orb.n, "h": orb.h, "L": orb.L,
            "conic_B": orb.conic_B, "ecc_e": orb.ecc_e, "ecc_E": orb.ecc_E, "T_h": orb.T_h,
            "delta_theta": orb.delta_theta, "r_min": orb.r_min, "r_max": orb.r_max}


def cmd_rosette(cfg: RunConfig):
    orb = rosette_orbit(cfg.spec, cfg.options["n"])
    out = _rosette_dict(orb)
    out["action"] = rosette_action(cfg.spec, orb.n)
    return out


def cmd_action_spectrum(cfg: RunConfig):
    spec = cfg.spec
    spectrum = action_spectrum(spec)
    return {"T": spec.T, "k": spec.k, "circular_action": circular_action(spec),
            "spectrum": [{"n": n, "action": a} for n, a in spectrum],
            "minimal": "circular" if not spectrum else f"rosette(1,{spec.k_abs})"}


def cmd_morse(cfg: RunConfig):
    o = cfg.options
    rep = morse_index(cfg.spec, modes=o["modes"], zero_tol=o["zero_tol"], method=o["method"])
    out = rep.as_dict()
    out["conley_zehnder"] = conley_zehnder_formula(cfg.spec)
    out.update(T=cfg.T, k=cfg.k)
    return out


def cmd_minimize(cfg: RunConfig):
    o = cfg.options
    spec = cfg.spec
    pot = parse_potential(o["potential"], spec.T) if o["potential"] else None
    N = suggest_nodes(spec) if o["nodes"] == "auto" else o["nodes"]
    opts = MinimizeOptions(gtol=o["gtol"], max_iter=o["max_iter"])
    study = convergence_study(spec, pot, N0=N, levels=o["study"] + 1, opts=opts)
    rep = study[0]
    out = rep.as_dict(include_loop=o["loop_out"] is None)
    if o["study"]:
        out["study"] = [{"nodes": r.loop.N, "action": r.action.total, "el_residual": r.el_residual,
                         "converged": r.converged} for r in study]
    if o["loop_out"] is not None:
        with open(o["loop_out"], "w") as fh:
            fh.write(rep.loop.to_json())
        out["loop_file"] = o["loop_out"]
    out.update(T=spec.T, k=spec.k, potential=pot.label if pot else None)
    return out


def _orbit_start(spec: ProblemSpec, n: int):
    if n == 0:
        orb = circular_orbit(spec)
        return orb.R, CartState([orb.R, 0.0], [0.0, orb.L / orb.R])
    orb = rosette_orbit(spec, n)
    x, p = orb.initial_state()
    return orb.r_min, CartState(x, p)


def cmd_integrate(cfg: RunConfig):
    o = cfg.options
    spec = cfg.spec
    _, s0 = _orbit_start(spec, o["n"])
    traj = integrate(cfg.params, s0, o["periods"] * spec.T, tol=o["tol"], t_stops=[spec.T])
    if (cfg.format or "csv") == "csv":
        return traj.to_csv(cfg.params)
    return {"T": spec.T, "k": spec.k, "n": o["n"], "stats": traj.stats,
            "periodicity_residual": periodicity_residual(cfg.params, traj, spec.T)}


def verify_checks(spec: ProblemSpec, nodes="auto", modes: int = 64) -> list:
    """Cross-check closed forms, integration, minimization and the Morse formula."""
    params = spec.params
    rep = classify(spec)
    jobs = []

    def check(name, value, threshold, passed=None):
        ok = (value <= threshold) if passed is None else passed
        return {"name": name, "value": float(value), "threshold": float(threshold), "passed": bool(ok)}

    def circular_checks():
        L = solve_angular_momentum(spec)
        out = [check("circular L equation residual", angular_momentum_residual(spec, L), 1e-12),
               check("circular Cardano agreement", abs(solve_angular_momentum_cardano(spec) - L) / L, 1e-10)]
        orb = circular_orbit(spec)
        traj = integrate(params, CartState([orb.R, 0.0], [0.0, orb.L / orb.R]), spec.T)
        out.append(check("circular orbit periodic under integration",
                         periodicity_residual(params, traj, spec.T), 1e-6))
        out.append(check("circular action vs discrete action",
                         abs(discrete_action(params, orb.sample(256)).total - circular_action(spec))
                         / circular_action(spec), 1e-8))
        return out

    def rosette_checks():
        out = []
        for n in range(1, rep.i_T + 1):
            orb = rosette_orbit(spec, n)
            per = max(abs(n * orb.T_h - spec.T) / spec.T,
                      abs(n * orb.delta_theta - 2 * math.pi * spec.k_abs) / (2 * math.pi * spec.k_abs))
            out.append(check(f"rosette ({n},{spec.k_abs}) periodicity relations", per, 1e-10,
                             passed=per <= 1e-10 and in_sigma(params, orb.energy_momentum)))
            closed = rosette_action(spec, n)
            disc = discrete_action(params, sample_loop(orb, 4096)).total
            out.append(check(f"rosette ({n},{spec.k_abs}) action vs discrete action",
                             abs(disc - closed) / closed, 1e-5))
        if rep.i_T >= 1:
            orb = rosette_orbit(spec, 1)
            x, p = orb.initial_state()
            traj = integrate(params, CartState(x, p), spec.T)
            out.append(check(f"rosette (1,{spec.k_abs}) periodic under integration",
                             periodicity_residual(params, traj, spec.T), 1e-6))
            out.append(check(f"rosette (1,{spec.k_abs}) energy drift", traj.stats["energy_drift"], 1e-8))
        return out

    def ordering_checks():
        levels = [a for _, a in action_spectrum(spec)]
        gaps = [levels[i] - levels[i + 1] for i in range(len(levels) - 1)]
        out = [check("rosette actions nondecreasing in n", max(gaps, default=-1.0), 0.0)]
        if levels:
            out.append(check("I_1 below circular action", levels[0] - circular_action(spec), 0.0,
                             passed=levels[0] < circular_action(spec)))
        return out

    def morse_checks():
        m = morse_index(spec, modes=modes)
        cz = conley_zehnder_formula(spec)
        return [check("Galerkin Morse index equals 2 i_T", abs(m.index - m.formula_index), 0.0),
                check("closed index formula equals 2 i_T", abs(cz - m.formula_index), 0.0)]

    def minimize_checks():
        expected = circular_action(spec) if rep.i_T == 0 else rosette_action(spec, 1)
        N = suggest_nodes(spec) if nodes == "auto" else nodes
        res = minimize(spec, opts=MinimizeOptions(gtol=1e-10), N=N)
        want_minima = 0 if rep.i_T == 0 else 1
        return [check("minimizer action matches minimal level",
                      abs(res.action.total - expected) / expected, 1e-4),
                check("minimizer Euler-Lagrange residual", res.el_residual, 1e-5),
                check("minimizer radial minima per period", abs(res.radial_minima - want_minima), 0.0),
                check("minimizer winding number", abs(res.winding - spec.k), 0.0)]

    jobs = [circular_checks, rosette_checks, ordering_checks, morse_checks, minimize_checks]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda f: f(), jobs))
    return [row for block in results for row in block]


def cmd_verify(cfg: RunConfig):
    spec = cfg.spec.positive()
    checks = verify_checks(spec, nodes=cfg.options["nodes"], modes=cfg.options["modes"])
    summary = {"T": spec.T, "k": spec.k, "i_T": classify(spec).i_T,
               "circular_action": circular_action(spec),
               "rosette_actions": [a for _, a in action_spectrum(spec)],
               "morse_index": morse_index(spec, modes=cfg.options["modes"]).index,
               "checks": checks, "all_passed": all(c["passed"] for c in checks)}
    if cfg.format == "csv":
        return _table_csv(["name", "passed", "value", "threshold"],
                          [(c["name"], c["passed"], c["value"], c["threshold"]) for c in checks])
    return summary


def cmd_sweep(cfg: RunConfig):
    o = cfg.options
    if o["T_max"] < o["T_min"]:
        raise UsageError("--T-max must not be below --T-min")
    Ts = np.geomspace(o["T_min"], o["T_max"], o["count"]) if o["count"] > 1 else np.array([o["T_min"]])

    def row(T):
        spec = ProblemSpec(float(T), cfg.k, cfg.params)
        spectrum = action_spectrum(spec)
        m = morse_index(spec, modes=o["modes"])
        return (float(T), classify(spec).i_T, m.index, m.formula_index, conley_zehnder_formula(spec),
                circular_action(spec), spectrum[0][1] if spectrum else float("nan"))

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(row, Ts))
    header = ["T", "i_T", "morse_index", "formula_index", "conley_zehnder", "circular_action", "min_rosette_action"]
    if (cfg.format or "csv") == "csv":
        return _table_csv(header, rows)
    return {"k": cfg.k, "rows": [dict(zip(header, [None if isinstance(v, float) and math.isnan(v) else v
                                                    for v in r])) for r in rows]}


COMMANDS = {
    "circular": cmd_circular,
    "classify": cmd_classify,
    "rosette": cmd_rosette,
    "action-spectrum": cmd_action_spectrum,
    "morse": cmd_morse,
    "minimize": cmd_minimize,
    "integrate": cmd_integrate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


CSV_COMMANDS = {"integrate", "sweep", "verify"}


def main(argv=None) -> int:
    try:
        cfg = RunConfig.parse(argv)
        if cfg.format == "csv" and cfg.command not in CSV_COMMANDS:
            raise UsageError(f"{cfg.command} has no CSV output")
        result = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except DomainError as exc:
        return _error(type(exc).__name__, str(exc), EXIT_DOMAIN)
    text = result if isinstance(result, str) else dumps(result)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
