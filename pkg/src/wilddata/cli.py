"""Command-line entry point.

Exit status: 0 success, 1 verification failed, 2 usage or configuration
error, 3 numerical failure (vacuum, blow-up, unattainable tolerances).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig
from .evolve import EvolutionError, HorizonError, NoEntropyProduction
from .glimm import DEFAULT_CFL, Grid1D, exact_grid, glimm_run, l1_distance, total_variation
from .pipeline import assemble_stage, evolve_stage, prepare, verify_stage
from .riemann import RiemannData, RootFindingError, solve_fan
from .surgery import EpsilonUnattainable, Partition, SurgeryError
from .thermo import PrimitiveState, ThermoError, ThermoParams
from .verify import BoundsBox, bounds_check, entropy_production_total, make_test_family, weak_residuals

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text, n=None, name="value"):
    try:
        vals = [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise UsageError(f"{name}: expected {n} numbers, got {len(vals)}")
    return vals


def _state(text, name):
    v = _floats(text, 4, name)
    try:
        return PrimitiveState(v[0], v[1], (v[2], v[3]))
    except ThermoError as exc:
        raise UsageError(f"{name}: {exc}") from exc


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    cfg.validate()
    return cfg


def _out(args, cfg=None) -> Path:
    d = Path(args.out if args.out is not None else (cfg.out if cfg else "out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# subcommands

def cmd_riemann(args):
    params = ThermoParams(args.c_v)
    fan = solve_fan(RiemannData(_state(args.left, "--left"), _state(args.right, "--right")), params)
    lo, hi = _floats(args.xi_range, 2, "--xi-range")
    out = _out(args)
    io.write_fan_samples(out / "fan.csv", fan, np.linspace(lo, hi, args.samples), params)
    io.write_json(out / "fan.json", io.fan_summary(fan))
    print(f"p_star={fan.p_star!r} u_star={fan.contact!r} lambda={fan.lam!r} "
          f"waves={fan.left_wave.kind}/{fan.right_wave.kind}")
    return EXIT_OK


def cmd_glimm(args):
    params = ThermoParams(args.c_v)
    d = RiemannData(_state(args.left, "--left"), _state(args.right, "--right"))
    g0 = Grid1D.from_riemann(d, args.cells, params)
    g = glimm_run(g0, args.T, params, cfl=args.cfl, sequence=args.sequence, seed=args.seed)
    ex = exact_grid(solve_fan(d, params), g0, g.t, 0.5, params)
    out = _out(args)
    io.write_grid1d(out / "glimm.csv", g, params)
    io.write_grid1d(out / "exact.csv", ex, params)
    err = l1_distance(g, ex)
    tv = total_variation(g0)
    io.write_json(out / "glimm.json", {"cells": args.cells, "T": g.t, "l1": err,
                                       "initial_tv": tv, "relative": err / tv})
    print(f"L1={err!r} TV0={tv!r} ratio={err / tv!r}")
    return EXIT_OK


def _setup_meta(setup):
    cfg = setup.config
    return {"config": cfg.echo(), "delta": setup.delta, "epsilon": cfg.epsilon, "q": cfg.q,
            "partition": list(setup.partition.points), "c_v": cfg.c_v,
            "delta_ladder": [list(r) for r in setup.choice.ladder]}


def cmd_surgery(args):
    cfg = _load_config(args)
    setup = prepare(cfg)
    out = _out(args, cfg)
    meta = _setup_meta(setup)
    io.write_torus(out / "wild.csv", setup.main.wild, meta)
    io.write_torus(out / "extension.csv", setup.main.extension, meta)
    print(f"delta={setup.delta!r} distance={setup.choice.distance!r} N={setup.partition.n}")
    return EXIT_OK


def _horizon_meta(h):
    return {"horizon": [h.t_s, h.t_r], "horizon_t": h.t}


def cmd_evolve(args):
    cfg = _load_config(args)
    setup = prepare(cfg)
    horizon = evolve_stage(setup)
    out = _out(args, cfg)
    meta = dict(_setup_meta(setup), **_horizon_meta(horizon))
    io.write_spacetime(out / "trajectory", setup.main.trajectory, meta)
    print(f"t_s={horizon.t_s!r} t_r={horizon.t_r!r} T={horizon.t!r}")
    return EXIT_OK


def cmd_assemble(args):
    cfg = _load_config(args)
    setup = prepare(cfg)
    horizon = evolve_stage(setup)
    assemble_stage(setup, horizon)
    out = _out(args, cfg)
    meta = dict(_setup_meta(setup), **_horizon_meta(horizon))
    io.write_spacetime(out / "assembly", setup.main.assembly, meta)
    io.write_torus(out / "wild.csv", setup.main.wild, _setup_meta(setup))
    print(f"assembled {len(setup.main.assembly)} snapshots up to T={horizon.t!r}")
    return EXIT_OK


def cmd_verify(args):
    if not args.field:
        raise UsageError("verify needs --field DIR (a space-time field directory)")
    field = io.read_spacetime(args.field)
    init_path = args.init or str(Path(args.field).parent / "wild.csv")
    if not Path(init_path).exists():
        raise UsageError(f"initial data {init_path} not found; pass --init")
    init, _ = io.read_torus(init_path)
    c_v = field.meta.get("c_v", args.c_v)
    params = ThermoParams(c_v)
    part = Partition(tuple(field.meta["partition"]), field.meta.get("epsilon", 1.0))
    family = make_test_family(float(field.times[-1]), part, field.meta["delta"])
    rep = weak_residuals(field, family, init, params)
    rep.entropy_production = entropy_production_total(field, params)
    ok = rep.entropy_min() >= -args.entropy_c * rep.h
    ok &= max(rep.max_magnitudes(relative=True).values(), default=0.0) <= args.residual_c * rep.h
    if args.box:
        box = BoundsBox(*_floats(args.box, 5, "--box"))
        ok_box, offenders = bounds_check(field, box)
        rep.bounds = {"ok": ok_box, "box": box.__dict__, "offenders": offenders}
        ok &= ok_box
    if field.meta.get("entropy_producing"):
        ok &= rep.entropy_production > 0.0
    out = _out(args)
    io.write_report(out / "residuals", rep)
    s = rep.summary()
    print(f"tests={s['n_tests']} skipped={s['n_skipped']} entropy_min={s['entropy_min']!r} "
          f"production={s['entropy_production']!r} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_pipeline(args):
    cfg = _load_config(args)
    setup = prepare(cfg)
    horizon = evolve_stage(setup)
    assemble_stage(setup, horizon)
    res = verify_stage(setup, horizon)
    out = _out(args, cfg)
    meta = dict(_setup_meta(setup), **_horizon_meta(horizon))
    io.write_torus(out / "wild.csv", setup.main.wild, _setup_meta(setup))
    io.write_spacetime(out / "assembly", setup.main.assembly, meta)
    io.write_spacetime(out / "assembly_mirrored", setup.mirror.assembly, meta)
    io.write_report(out / "residuals", res.report)
    io.write_json(out / "verdict.json", dict(res.verdict, config=cfg.echo()))
    for name, chk in res.verdict["checks"].items():
        print(f"{name}: {'PASS' if chk['pass'] else 'FAIL'}")
    print(f"verdict: {'PASS' if res.passed else 'FAIL'}")
    return EXIT_OK if res.passed else EXIT_VERIFY


# ---------------------------------------------------------------------------

def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags without defaults, so a flag given
    # before the subcommand is not overwritten
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--config", default=d(None), help="JSON run configuration")
    c.add_argument("--out", default=d(None), help="output directory")
    c.add_argument("--threads", type=int, default=d(1),
                   help="thread budget (kernels are vectorized and single-threaded)")
    c.add_argument("--seed", type=int, default=d(None), help="seed for probes and random sampling")
    c.add_argument("--c-v", dest="c_v", type=float, default=d(2.5), help="specific heat (default 2.5)")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="wilddata", description=__doc__.splitlines()[0],
                                parents=[_common(suppress=False)])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    r = sub.add_parser("riemann", parents=[common], help="solve one Riemann problem and sample its fan")
    r.add_argument("--left", required=True, help="rho,theta,u1,u2")
    r.add_argument("--right", required=True, help="rho,theta,u1,u2")
    r.add_argument("--xi-range", default="-3,3")
    r.add_argument("--samples", type=int, default=601)
    r.set_defaults(func=cmd_riemann)

    g = sub.add_parser("glimm", parents=[common], help="random-choice run against the exact fan")
    g.add_argument("--left", default="1,1,0,0")
    g.add_argument("--right", default="0.125,0.8,0,0")
    g.add_argument("--cells", type=int, default=1024)
    g.add_argument("--T", type=float, default=0.2)
    g.add_argument("--cfl", type=float, default=DEFAULT_CFL)
    g.add_argument("--sequence", choices=("vdc", "random"), default="vdc")
    g.set_defaults(func=cmd_glimm)

    for name, fn, text in (
        ("surgery", cmd_surgery, "surgered data and smooth extension"),
        ("evolve", cmd_evolve, "smooth evolution up to the horizon"),
        ("assemble", cmd_assemble, "pasted solution"),
        ("pipeline", cmd_pipeline, "full construction with verdict"),
    ):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.set_defaults(func=fn)

    v = sub.add_parser("verify", parents=[common], help="weak-form checks of a space-time field")
    v.add_argument("--field", help="space-time field directory (manifest.json + CSVs)")
    v.add_argument("--init", help="initial data CSV (default: wild.csv next to the field)")
    v.add_argument("--box", help="rho_min,rho_max,theta_min,theta_max,speed_max")
    v.add_argument("--residual-c", type=float, default=1.0)
    v.add_argument("--entropy-c", type=float, default=1.0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ThermoError, EvolutionError, RootFindingError, EpsilonUnattainable, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigError, SurgeryError, HorizonError, NoEntropyProduction,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
