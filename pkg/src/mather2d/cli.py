"""Command-line front end: config-driven, deterministic, atomic file output.

Every subcommand loads the same JSON config (see config.py), seeds all
randomness from it, and writes results either to stdout (model-eval) or to
files in the output directory, atomically (write to a temp file in the same
directory, then rename).  CSV files start with comment lines recording the
config hash and seed; JSON files carry the same pair under a "meta" key,
since JSON has no comments.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile

import numpy as np

from . import convex, flow, graphs
from .config import ConfigError, RunConfig
from .model import (CohomologyClass, LiftedPoint, MagneticModel, TangentVec,
                    energy, hamiltonian, lagrangian, legendre)

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1).

    The widened negative-number pattern lets tokens like '-1,1' (range and
    segment positionals) through without a '--' separator.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-[\d.][\d.,eE+-]*$")

    def error(self, message):
        raise ConfigError(message)


def _out_dir(cfg: RunConfig) -> str:
    d = cfg.output.directory or os.environ.get("MATHER2D_OUT", ".")
    os.makedirs(d, exist_ok=True)
    return d


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _g(x: float) -> str:
    return "%.10g" % x


def _write_table(cfg: RunConfig, basename: str, columns: list[str],
                 rows: list[tuple]) -> str:
    """Emit rows as CSV or JSON per the config, with provenance header."""
    out = _out_dir(cfg)
    if cfg.output.format == "csv":
        path = os.path.join(out, basename + ".csv")
        lines = [f"# config_hash: {cfg.digest()}",
                 f"# seed: {cfg.variational.seed}",
                 ",".join(columns)]
        for row in rows:
            lines.append(",".join(v if isinstance(v, str) else _g(v) for v in row))
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        path = os.path.join(out, basename + ".json")
        doc = {"meta": {"config_hash": cfg.digest(), "seed": cfg.variational.seed},
               "columns": columns,
               "rows": [[v if isinstance(v, str) else float(v) for v in row]
                        for row in rows]}
        _atomic_write(path, json.dumps(doc, indent=1) + "\n")
    return path


def _write_json(cfg: RunConfig, basename: str, payload: dict) -> str:
    path = os.path.join(_out_dir(cfg), basename + ".json")
    doc = {"meta": {"config_hash": cfg.digest(), "seed": cfg.variational.seed}}
    doc.update(payload)
    _atomic_write(path, json.dumps(doc, indent=1) + "\n")
    return path


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{what} must be 'a,b', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{what} must be two numbers, got {text!r}") from None


def _build_table(cfg: RunConfig, workers: int) -> convex.ConvexTable:
    model = MagneticModel(cfg.model.amplitude)
    v = cfg.variational
    return convex.build_beta_table(
        model, box=cfg.grid.h_box, steps=cfg.grid.steps,
        q_max=v.q_max, period_scale=v.period_scale, N=v.N,
        restarts=v.restarts, seed=v.seed, grad_tol=v.grad_tol,
        max_iters=v.max_iters, workers=workers,
    )


def _cmd_model_eval(cfg: RunConfig, args) -> int:
    model = MagneticModel(cfg.model.amplitude)
    v = TangentVec(args.v1, args.v2)
    p = legendre(model, args.x, v)
    record = {
        "L": lagrangian(model, args.x, args.v1, args.v2),
        "E": energy(model, args.v1, args.v2),
        "p": [p.p1, p.p2],
        "H": hamiltonian(model, args.x, p),
    }
    print(json.dumps(record))
    return 0


def _cmd_flow_integrate(cfg: RunConfig, args) -> int:
    dt = cfg.integrator.dt
    if dt > args.T:
        raise ConfigError(f"integrator.dt = {dt} exceeds requested T = {args.T}")
    if args.T > cfg.integrator.max_T:
        raise ConfigError(f"T = {args.T} exceeds integrator.max_T = {cfg.integrator.max_T}")
    model = MagneticModel(cfg.model.amplitude)
    s0 = flow.FlowState(LiftedPoint(args.x, args.y), TangentVec(args.v1, args.v2))
    traj = flow.integrate(model, s0, args.T, dt)
    en = traj.energies()
    fi = traj.first_integrals(model)
    rows = [
        (traj.times[k], traj.positions[k, 0], traj.positions[k, 1],
         traj.velocities[k, 0], traj.velocities[k, 1], en[k], fi[k])
        for k in range(traj.times.size)
    ]
    path = _write_table(cfg, "trajectory",
                        ["t", "X", "Y", "v1", "v2", "energy", "first_integral"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_beta_grid(cfg: RunConfig, args) -> int:
    table = _build_table(cfg, args.workers)
    rows = [
        (table.h1[i], table.h2[j], table.values[i, j])
        for i in range(table.h1.size) for j in range(table.h2.size)
    ]
    path = _write_table(cfg, "beta_grid", ["h1", "h2", "beta"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_alpha_grid(cfg: RunConfig, args) -> int:
    classes = [_parse_pair(tok, "class") for tok in args.classes]
    table = convex.convexify(_build_table(cfg, args.workers))
    rows = []
    for c1, c2 in classes:
        a = convex.alpha_from_beta(table, CohomologyClass(c1, c2))
        rows.append((c1, c2, a))
    path = _write_table(cfg, "alpha_grid", ["c1", "c2", "alpha"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_corner_scan(cfg: RunConfig, args) -> int:
    start = _parse_pair(args.start, "segment start")
    end = _parse_pair(args.end, "segment end")
    table = convex.convexify(_build_table(cfg, args.workers))
    prof = convex.slope_profile(table, start, end, samples=args.samples)
    corners = convex.corner_scan(table, start, end, samples=args.samples,
                                 gap_tol=cfg.tolerances.corner_gap_tol)
    rows = [tuple(prof[k]) for k in range(prof.shape[0])]
    path = _write_table(cfg, "corner_scan",
                        ["t", "h1", "h2", "left_slope", "right_slope", "gap"], rows)
    summary = [
        {"t": c.t, "h1": c.location.h1, "h2": c.location.h2,
         "left_slope": c.left_slope, "right_slope": c.right_slope, "gap": c.gap}
        for c in corners
    ]
    print(json.dumps({"corners": summary, "file": path}))
    return 0


def _cmd_example_region(cfg: RunConfig, args) -> int:
    e_lo, e_hi = _parse_pair(args.E_range, "E-range")
    f_lo, f_hi = _parse_pair(args.F_range, "F-range")
    if e_lo <= 0:
        raise ConfigError(f"E-range must be positive, got {args.E_range!r}")
    n = cfg.grid.steps
    rows = graphs.region_scan(np.linspace(e_lo, e_hi, n), np.linspace(f_lo, f_hi, n))
    path = _write_table(cfg, "region_scan", ["E", "F", "status"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_absorbing_witness(cfg: RunConfig, args) -> int:
    model = MagneticModel(cfg.model.amplitude)
    E = args.E
    level = args.level if args.level is not None else math.sqrt(2.0 * E) - 1.0
    if 200.0 + 40.0 > cfg.integrator.max_T:
        raise ConfigError("witness run needs integrator.max_T >= 240")
    try:
        rep = graphs.absorbing_witness(
            model, E, level, n_orbits=args.orbits, dt=cfg.integrator.dt,
            seed=cfg.variational.seed,
        )
        payload = {
            "witness": True, "E": rep.E, "level": rep.level,
            "x": rep.x, "phi": rep.phi,
            "point_to_other_graph": rep.point_to_other_graph,
            "cloud_to_other_graph": rep.cloud_to_other_graph,
            "cloud_to_gamma1": rep.cloud_to_gamma1,
            "orbits_checked": rep.orbits_checked,
        }
    except graphs.InconclusiveWitness as exc:
        payload = {"witness": False, "E": E, "level": level, "detail": str(exc)}
    path = _write_json(cfg, "witness_report", payload)
    print(f"wrote {path}")
    return 0


def _verify_checks(cfg: RunConfig) -> dict:
    """Closed-form consistency checks for the cos(2*pi*x) example model."""
    model = MagneticModel(cfg.model.amplitude)
    rng = np.random.default_rng(cfg.variational.seed)
    checks: dict[str, dict] = {}

    def record(name: str, value, passed: bool):
        checks[name] = {"pass": bool(passed),
                        "value": value if isinstance(value, str) else float(value)}

    from .model import inverse_legendre
    worst = 0.0
    for _ in range(200):
        x = float(rng.uniform())
        v = TangentVec(*rng.normal(size=2))
        w = inverse_legendre(model, x, legendre(model, x, v))
        worst = max(worst, abs(w.v1 - v.v1), abs(w.v2 - v.v2))
    record("legendre_roundtrip", worst, worst < 1e-12)

    spots = [(1.0, 0.4, "foliated"), (1.0, 0.42, "none"),
             (1.0, math.sqrt(2.0) - 1.0, "saddle-boundary"), (0.3, 0.0, "none")]
    got = [graphs.graph_exists(E, F) for E, F, _ in spots]
    record("region_spots", ",".join(got), got == [s[2] for s in spots])

    xs = np.linspace(0.0, 1.0, 257)
    worst = 0.0
    for E, F in [(1.0, 0.0), (1.0, 0.3), (2.0, -0.5), (0.7, 0.1)]:
        for b in (1, 2):
            p = graphs.GraphParams(E, F, b)
            phi = graphs.solve_branch(xs, p)
            worst = max(worst, float(np.max(np.abs(graphs.first_integral(xs, phi, E) - F))))
    record("branch_chart", worst, worst < 1e-12)

    worst = 0.0
    for E, F in [(1.0, 0.0), (1.5, 0.2), (0.8, -0.1)]:
        for b in (1, 2):
            p = graphs.GraphParams(E, F, b)
            for x in rng.uniform(size=50):
                d = (graphs.eta_form(float(x), p).as_array()
                     - graphs.graph_momentum(model, float(x), p).as_array())
                worst = max(worst, float(np.max(np.abs(d))))
    record("eta_equals_momentum", worst, worst < 1e-12)

    pts = graphs.critical_points(1.0)
    expected = {(0.0, "max"), (0.0, "saddle"), (0.5, "saddle"), (0.5, "min")}
    got_set = {(p.x, p.kind) for p in pts}
    record("critical_points", ";".join(sorted(f"{p.x:g}:{p.kind}" for p in pts)),
           len(pts) == 4 and got_set == expected)

    orbs = graphs.singular_rotation_vectors(1.0)
    root2 = math.sqrt(2.0)
    ok = (abs(orbs[0].rotation.h2 - root2) < 1e-15 and orbs[0].x == 0.5
          and abs(orbs[1].rotation.h2 + root2) < 1e-15 and orbs[1].x == 0.0)
    s0 = flow.FlowState(LiftedPoint(0.5, 0.0), TangentVec(0.0, root2))
    rot = flow.rotation_vector_estimate(flow.integrate(model, s0, 5.0, cfg.integrator.dt))
    err = math.hypot(rot.h1, rot.h2 - root2)
    record("singular_rotation", err, ok and err < 1e-6)

    bdry = graphs.cohomology_class(graphs.GraphParams(1.0, math.sqrt(2.0) - 1.0, 1))
    lim = graphs.saddle_class(1.0, branch=1, side="upper")
    err = math.hypot(lim.c1 - bdry.c1, lim.c2 - bdry.c2)
    record("saddle_class_limit", err, err < 1e-6)

    dev = graphs.graph_invariance_check(model, graphs.GraphParams(1.0, 0.0, 1),
                                        n_seeds=4, T=20.0, dt=cfg.integrator.dt,
                                        seed=cfg.variational.seed)
    record("graph_invariance", dev, dev < cfg.tolerances.invariance_tol)
    return checks


def _cmd_example_verify(cfg: RunConfig, args) -> int:
    if abs(cfg.model.amplitude - 1.0) > 1e-15:
        raise ConfigError("example-verify requires model.amplitude = 1 "
                          "(closed forms assume the unit-amplitude model)")
    checks = _verify_checks(cfg)
    all_pass = all(c["pass"] for c in checks.values())
    path = _write_json(cfg, "verify_report", {"checks": checks, "all_pass": all_pass})
    print(json.dumps({"all_pass": all_pass, "file": path}))
    return 0 if all_pass else 2


def _build_parser() -> _Parser:
    parser = _Parser(prog="mather2d",
                     description="Average-action (Mather alpha/beta) toolkit for a "
                                 "magnetic Lagrangian on the two-torus.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to JSON run config")
        p.set_defaults(func=func)
        return p

    p = add("model-eval", "evaluate L, E, p, H at a phase point", _cmd_model_eval)
    for name in ("x", "y", "v1", "v2"):
        p.add_argument(name, type=float)

    p = add("flow-integrate", "integrate one orbit, write trajectory CSV",
            _cmd_flow_integrate)
    for name in ("x", "y", "v1", "v2", "T"):
        p.add_argument(name, type=float)

    p = add("beta-grid", "estimate beta on the config grid", _cmd_beta_grid)
    p.add_argument("--workers", type=int, default=1)

    p = add("alpha-grid", "conjugate the beta table at given classes", _cmd_alpha_grid)
    p.add_argument("classes", nargs="+", metavar="c1,c2")
    p.add_argument("--workers", type=int, default=1)

    p = add("corner-scan", "one-sided slopes of beta along a segment", _cmd_corner_scan)
    p.add_argument("start", metavar="h1,h2")
    p.add_argument("end", metavar="h1,h2")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--workers", type=int, default=1)

    add("example-verify", "closed-form consistency report for the example model",
        _cmd_example_verify)

    p = add("example-region", "graph existence scan over an (E, F) box",
            _cmd_example_region)
    p.add_argument("E_range", metavar="Elo,Ehi")
    p.add_argument("F_range", metavar="Flo,Fhi")

    p = add("absorbing-witness", "search for a non-absorbing-graph witness orbit",
            _cmd_absorbing_witness)
    p.add_argument("E", type=float)
    p.add_argument("--level", type=float, default=None,
                   help="first-integral level (default: the saddle level)")
    p.add_argument("--orbits", type=int, default=8)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig.load(args.config)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
