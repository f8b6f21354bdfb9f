"""``foliant`` command line: check, modulus, funnel and rotate subcommands.

Exit codes for ``check``: 0 SUPPORTED, 2 TRANSVERSALITY_FAILS,
3 LIPSCHITZ_BLOWUP, 4 INCONCLUSIVE. Usage and config errors exit with 1.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .checker import (
    EXIT_CODES,
    UniquenessReport,
    check_cid,
    check_hyperplane,
    check_main,
    check_stettner_nowak,
)
from .config import ProblemConfig, load_config, parse_vector
from .errors import FoliantError
from .field import IVP, VectorField, registry_get
from .linalg import normalize, rotation_between
from .modulus import DEFAULT_BUDGET, DEFAULT_DELTA, DEFAULT_SEED, ModulusQuery, modulus_gradient, modulus_sample
from .ode import funnel
from .report import Report, add_funnel, add_modulus, add_uniqueness, fmt, header, write_trajectory_csv


class UsageError(Exception):
    pass


def _vector_arg(text: str) -> np.ndarray:
    try:
        return parse_vector(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror or exc}") from None


def _config_section(rep: Report, cfg: ProblemConfig) -> None:
    items = [("path", Path(cfg.path).name), ("dimension", cfg.dimension), ("field", cfg.field_spec),
             ("p0", cfg.p0), ("t0", cfg.t0), ("theorem", cfg.theorem)]
    items += [(f"foliation.{k}", v) for k, v in cfg.foliation_spec.items()]
    if cfg.basis is not None:
        items.append(("basis", "; ".join(fmt(b) for b in cfg.basis)))
    if cfg.u is not None:
        items.append(("u", cfg.u))
    rep.section("config", items)


def run_check(cfg: ProblemConfig) -> UniquenessReport:
    params = cfg.check
    if cfg.theorem == "cid":
        return check_cid(cfg.field, cfg.p0, params)
    if cfg.theorem == "hyperplane":
        return check_hyperplane(cfg.field, cfg.p0, cfg.basis, params)
    if cfg.theorem == "stettner-nowak":
        return check_stettner_nowak(cfg.field, cfg.p0, cfg.u, params)
    return check_main(cfg.field, cfg.foliation, params, cfg.p0)


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.budget is not None:
        overrides["budget"] = args.budget
    if overrides:
        cfg.check = replace(cfg.check, **overrides)
    result = run_check(cfg)
    rep = Report()
    rep.section("run", header("check", cfg.sha256, cfg.check.seed))
    _config_section(rep, cfg)
    add_uniqueness(rep, result)
    _emit(rep.text(), args.out)
    return EXIT_CODES[result.verdict]


def cmd_modulus(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
        field, sha = cfg.field, cfg.sha256
        p = cfg.modulus_p if cfg.modulus_p is not None else cfg.p0
        v, delta = cfg.modulus_v, cfg.delta
        budget, seed = cfg.modulus_budget, cfg.modulus_seed
        source = cfg.field_spec
    elif args.field is not None:
        field = registry_get(args.field)
        if not isinstance(field, VectorField):
            raise UsageError(f"{args.field!r} is not a vector field")
        sha = hashlib.sha256(args.field.encode()).hexdigest()
        p, v, delta, budget, seed = None, None, DEFAULT_DELTA, DEFAULT_BUDGET, DEFAULT_SEED
        source = args.field
    else:
        raise UsageError("modulus needs --config or --field")
    p = args.p if args.p is not None else p
    v = args.v if args.v is not None else v
    delta = args.delta if args.delta is not None else delta
    budget = args.budget if args.budget is not None else budget
    seed = args.seed if args.seed is not None else seed
    if p is None or v is None:
        raise UsageError("modulus needs a point p and a direction v")
    q = ModulusQuery(field, p, v, delta, budget, seed)
    est = modulus_sample(q)
    try:
        grad: float | str = modulus_gradient(field, q.p, q.v)
    except (FoliantError, ArithmeticError) as exc:
        grad = f"unavailable ({exc})"
    rep = Report()
    rep.section("run", header("modulus", sha, seed))
    rep.section("query", [("field", source), ("p", q.p), ("v", q.v.vector), ("delta", delta),
                          ("budget", budget)])
    add_modulus(rep, est, grad)
    _emit(rep.text(), args.out)
    return 0


def cmd_funnel(args) -> int:
    cfg = load_config(args.config)
    t_end = args.t_end if args.t_end is not None else cfg.t_end
    step = args.step if args.step is not None else cfg.step
    reports = funnel(IVP(cfg.field, cfg.p0, cfg.t0), cfg.epsilons, t_end, step, cfg.directions)
    rep = Report()
    rep.section("run", header("funnel", cfg.sha256, "none"))
    rep.section("parameters", [("field", cfg.field_spec), ("p0", cfg.p0), ("t0", cfg.t0),
                               ("t_end", t_end), ("step", step), ("epsilons", cfg.epsilons),
                               ("directions", cfg.directions)])
    add_funnel(rep, reports)
    if args.csv_dir is not None:
        out = Path(args.csv_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create {out}: {exc.strerror or exc}") from None
        for i, fr in enumerate(reports):
            for j, traj in enumerate(fr.trajectories):
                write_trajectory_csv(out / f"funnel_{i}_{j}.csv", traj)
    _emit(rep.text(), args.out)
    return 0


def cmd_rotate(args) -> int:
    u, v = args.u, args.v
    if u.size != v.size:
        raise UsageError("u and v must have the same length")
    r = rotation_between(normalize(u), normalize(v))
    lines = [" ".join("%.17g" % x for x in row) for row in r]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="foliant", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"foliant {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")

    pc = sub.add_parser("check", parents=[common], help="run a uniqueness check")
    pc.add_argument("--config", required=True)
    pc.add_argument("--seed", type=int)
    pc.add_argument("--budget", type=int)
    pc.set_defaults(func=cmd_check)

    pm = sub.add_parser("modulus", parents=[common], help="estimate a modulus of continuity")
    src = pm.add_mutually_exclusive_group()
    src.add_argument("--config")
    src.add_argument("--field", help="registry field name")
    pm.add_argument("--p", type=_vector_arg, help="point, e.g. 1,1")
    pm.add_argument("--v", type=_vector_arg, help="normal direction, e.g. --v=-2,1")
    pm.add_argument("--delta", type=float)
    pm.add_argument("--budget", type=int)
    pm.add_argument("--seed", type=int)
    pm.set_defaults(func=cmd_modulus)

    pf = sub.add_parser("funnel", parents=[common], help="integrate perturbed trajectories")
    pf.add_argument("--config", required=True)
    pf.add_argument("--t-end", dest="t_end", type=float)
    pf.add_argument("--step", type=float)
    pf.add_argument("--csv-dir", help="directory for per-trajectory CSV files")
    pf.set_defaults(func=cmd_funnel)

    pr = sub.add_parser("rotate", parents=[common], help="print the rotation sending u to v")
    pr.add_argument("--u", type=_vector_arg, required=True)
    pr.add_argument("--v", type=_vector_arg, required=True)
    pr.set_defaults(func=cmd_rotate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 1
    try:
        return args.func(args)
    except (UsageError, FoliantError, ValueError, ArithmeticError) as exc:
        print(f"foliant: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
