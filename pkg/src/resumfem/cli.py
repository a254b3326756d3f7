"""Command-line front end: ``resumfem <subcommand> [options]``.

Exit codes: 0 success, 2 golden mismatch, 3 configuration error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .continuation import ContinuationParams, advance, fixed_step_integrate
from .errors import BadConfig, ResumfemError, UnknownRecipe
from .fem import apply_dirichlet_rows, assemble, build_space, reduce_dirichlet
from .io import write_json, write_rows
from .linalg import cond2, cond_fro
from .plot import Series, emit_plot
from .recipes import RECIPES, ExperimentConfig, run_recipe
from .series import (
    BurgersModel,
    HeatModel,
    compute_terms,
    error_report,
    exact_heat_term,
    exact_viscous_term,
    find_alpha0,
    find_ratio,
    plan_for,
)

log = logging.getLogger("resumfem")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _strs(text: str) -> list[str]:
    return [v for v in text.split(",") if v]


def _pade(text: str) -> tuple[int, int]:
    r, s = text.split(",")
    return int(r), int(s)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["heat", "burgers"])
    p.add_argument("--nu", type=float)
    p.add_argument("--cells", type=_ints, help="comma-separated cell counts (h = 1/cells on [0,1])")
    p.add_argument("--degree", type=_ints, help="comma-separated polynomial degrees")
    p.add_argument("-m", type=int, dest="m", help="series truncation order")
    p.add_argument("--eps", type=float)
    p.add_argument("--ng", type=int, help="Gauss-Laguerre points")
    p.add_argument("--pade", type=_pade, help="numerator,denominator degrees r,s")
    p.add_argument("--dt", type=_floats, help="fixed time step(s); omit for adaptive stepping")
    p.add_argument("--plan", type=_strs, help="stabilization plan(s): none,constant,doubling,geometric")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--out", help="output directory (default $RESUMFEM_OUT or ./resumfem-out)")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="resumfem", description="Borel-Pade-Laplace integrator for 1D FEM parabolic problems")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, help_ in [
        ("terms", "compute series terms and their errors against the closed-form terms"),
        ("condnum", "condition numbers of the mass matrix"),
        ("alpha", "stabilization exponent c and ratio R"),
        ("integrate", "run the BPL time integrator"),
    ]:
        _common(sub.add_parser(name, help=help_))
    rp = sub.add_parser("recipe", help="reproduce a table or figure")
    rp.add_argument("name", help=f"one of: {', '.join(sorted(RECIPES))}")
    _common(rp)
    pp = sub.add_parser("plot", help="plot columns of a CSV file as SVG")
    pp.add_argument("csv")
    pp.add_argument("--x", required=True)
    pp.add_argument("--y", required=True)
    pp.add_argument("--group", help="column whose values split the rows into series")
    pp.add_argument("--logy", action="store_true")
    pp.add_argument("--title", default="")
    pp.add_argument("--out", required=True, help="SVG file to write")
    return ap


def load_config(args) -> ExperimentConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise BadConfig(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise BadConfig("config file must hold a JSON object")
    cfg = ExperimentConfig.from_dict(data)
    overrides = {
        "model": args.model, "nu": args.nu, "cells": args.cells, "degrees": args.degree, "m": args.m,
        "eps": args.eps, "ng": args.ng, "dt": args.dt, "plans": args.plan, "T": args.t_final,
        "out": args.out, "jobs": args.jobs,
    }
    if args.pade:
        overrides["r"], overrides["s"] = args.pade
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.out is None:
        cfg.out = os.environ.get("RESUMFEM_OUT", "resumfem-out")
    return cfg.validate()


def _model(cfg: ExperimentConfig):
    return HeatModel(cfg.nu) if cfg.model == "heat" else BurgersModel(cfg.nu)


def _initial(cfg: ExperimentConfig, x):
    return np.sin(np.pi * x) if cfg.model == "heat" else np.sin(2 * np.pi * x)


def _oracle(cfg: ExperimentConfig, x):
    if cfg.model == "heat":
        return lambda k: exact_heat_term(k, cfg.nu, x)
    return lambda k: exact_viscous_term(k, cfg.nu, x)


def cmd_terms(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    m = cfg.m or 5
    for n in cfg.cells or [20]:
        for p in cfg.degrees or [1]:
            for plan_name in cfg.plans or ["none"]:
                space = build_space(cfg.a, cfg.b, n, p)
                full = assemble(space)
                red = reduce_dirichlet(full, space)
                x = space.node_coords[space.interior]
                plan = plan_for(plan_name, full.M, full.K, space.h, boundary=space.boundary)
                terms = compute_terms(_model(cfg), space, red, _initial(cfg, x), m, plan)
                tag = f"{cfg.model}_n{n}_p{p}_{plan_name}"
                terms.to_csv(out / f"terms_{tag}.csv", x)
                rep = error_report(terms, _oracle(cfg, x), None)
                rep.to_csv(out / f"errors_{tag}.csv")
                print(f"{tag}: " + " ".join(f"e{k}={e:.3e}" for k, e in zip(rep.k, rep.e)))
    return EXIT_OK


def cmd_condnum(cfg: ExperimentConfig) -> int:
    rows = []
    for p in cfg.degrees or [1, 2, 3, 4]:
        for n in cfg.cells or [10, 30, 50, 100]:
            space = build_space(cfg.a, cfg.b, n, p)
            ops = assemble(space)
            red = reduce_dirichlet(ops, space)
            vals = (
                cond2(apply_dirichlet_rows(ops.M, space.boundary, "rows")),
                cond2(ops.M), cond2(red.M), cond_fro(red.M),
            )
            rows.append((p, n, *vals))
            print(f"p={p} h=1/{n}: rows={vals[0]:.2f} full={vals[1]:.2f} reduced={vals[2]:.2f} reduced_fro={vals[3]:.2f}")
    write_rows(Path(cfg.out) / "condnum.csv", ["p", "cells", "cond2_rows", "cond2_full", "cond2_reduced", "condfro_reduced"], rows)
    return EXIT_OK


def cmd_alpha(cfg: ExperimentConfig) -> int:
    rows = []
    for p in cfg.degrees or [2]:
        for n in cfg.cells or [20, 50, 100]:
            space = build_space(cfg.a, cfg.b, n, p)
            ops = assemble(space)
            ch = find_alpha0(ops.M, ops.K, space.h, boundary=space.boundary)
            rr = find_ratio(ops.M, ops.K, ch.alpha0, boundary=space.boundary)
            rows.append((p, n, ch.c, ch.alpha0, ch.kappa, rr.R))
            print(f"p={p} h=1/{n}: c={ch.c:.2f} alpha0={ch.alpha0:.6g} kappa={ch.kappa:.4g} R={rr.R:.1f}")
    write_rows(Path(cfg.out) / "alpha.csv", ["p", "cells", "c", "alpha0", "kappa", "R"], rows)
    return EXIT_OK


def cmd_integrate(cfg: ExperimentConfig) -> int:
    n = (cfg.cells or [20])[0]
    p = (cfg.degrees or [1])[0]
    plan_name = (cfg.plans or ["geometric"])[0]
    m = cfg.m or 5
    r = cfg.r if cfg.r is not None else (m - 1) // 2
    s = cfg.s if cfg.s is not None else m - 1 - r
    T = cfg.T or (1.0 if cfg.model == "heat" else 0.5)
    space = build_space(cfg.a, cfg.b, n, p)
    full = assemble(space)
    red = reduce_dirichlet(full, space)
    x = space.node_coords[space.interior]
    plan = plan_for(plan_name, full.M, full.K, space.h, boundary=space.boundary)
    u0 = _initial(cfg, x)
    if cfg.dt:
        trace = fixed_step_integrate(_model(cfg), space, red, u0, plan, cfg.dt[0], T, m, r, s, cfg.ng,
                                     full_ops=full, residual_rows=cfg.residual_rows, residual_norm=cfg.residual_norm)
    else:
        # the boundary rows of the assembled system carry a defect that does not
        # vanish as dt -> 0, so the adaptive gate always uses the interior rows
        params = ContinuationParams(m=m, eps=cfg.eps, r=r, s=s, ng=cfg.ng, T=T,
                                    residual_norm=cfg.residual_norm, residual_rows="interior")
        trace = advance(_model(cfg), space, red, u0, plan, params, full_ops=full)
    out = Path(cfg.out)
    tag = f"{cfg.model}_n{n}_p{p}_{plan_name}"
    trace.to_csv(out / f"trace_{tag}.csv")
    summary = {"summary": trace.summary(), "reason": trace.reason, "config": asdict(cfg), "plan": asdict(plan)}
    if len(trace.records) >= 2:
        summary["ires"] = trace.ires
    write_json(out / f"trace_{tag}.json", summary)
    print(trace.summary())
    return EXIT_OK if trace.completed else EXIT_RUNTIME


def cmd_recipe(name: str, cfg: ExperimentConfig) -> int:
    rep = run_recipe(name, cfg)
    for row in rep.rows():
        if row[-1] != "info":
            print(",".join(str(v) for v in row[1:]))
    checked = rep.checked
    print(f"{name}: {len(checked) - len(rep.failures)}/{len(checked)} golden cells pass")
    return EXIT_OK if rep.passed else EXIT_MISMATCH


def cmd_plot(args) -> int:
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise BadConfig(f"{args.csv} has no data rows")
    for col in (args.x, args.y) + ((args.group,) if args.group else ()):
        if col not in rows[0]:
            raise BadConfig(f"column {col!r} not in {args.csv}")
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row[args.group] if args.group else args.y, []).append(row)

    def num(v):
        try:
            return float(v)
        except ValueError:
            return math.nan

    series = [Series(g, [num(r[args.x]) for r in rs], [num(r[args.y]) for r in rs]) for g, rs in groups.items()]
    path = emit_plot(series, args.out, logy=args.logy, title=args.title, xlabel=args.x, ylabel=args.y)
    print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.cmd == "plot":
            return cmd_plot(args)
        cfg = load_config(args)
        if args.cmd == "recipe":
            return cmd_recipe(args.name, cfg)
        return {"terms": cmd_terms, "condnum": cmd_condnum, "alpha": cmd_alpha, "integrate": cmd_integrate}[args.cmd](cfg)
    except (BadConfig, UnknownRecipe) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResumfemError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
