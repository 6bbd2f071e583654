"""Command-line experiment driver.

Exit statuses: 0 success, 1 property failure, 2 usage or configuration
error, 3 numeric-domain failure (ambiguous unwrapping).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from cwexp.area import verify_area
from cwexp.config import ConfigError, load_config
from cwexp.errors import GeometryError, PreconditionError, ResourceError, UnwrapError
from cwexp.hyperbolic import CAT
from cwexp.io import dumps, write_csv, write_json
from cwexp.perturbation import fixed_point
from cwexp.shadowing import (
    make_pseudo_orbit,
    nominal_bound,
    shadow_solve,
    shadow_verify,
    sphere_shadow,
)
from cwexp.spaces import densify, project
from cwexp.stability import (
    class_separation,
    propagate_chain,
    random_monotone_chains,
    xi_stability_test,
)
from cwexp.suite import build_map, run_suite
from cwexp.systems import SYSTEMS, anosov_system, get_system, sphere_system, ttilde_system

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _pair(text):
    try:
        x, y = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from None
    return np.array([x, y])


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--xi", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--horizon", type=int)
    common.add_argument("--eta", type=float)
    common.add_argument("--out", help="output directory")

    p = argparse.ArgumentParser(prog="cwexp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("orbit", parents=[common], help="orbit of one point as CSV")
    o.add_argument("--map", default="anosov", help=f"one of {', '.join(sorted(SYSTEMS))}")
    o.add_argument("--x0", type=_pair, default=None, help="start point 'x,y'")
    o.add_argument("--start-level", type=int, default=None,
                   help="start at the fixed point of this level (ttilde, gpert)")
    o.add_argument("--steps", type=int, default=10)

    e = sub.add_parser("escape", parents=[common], help="escape certificates for chains u_n -> u_m")
    e.add_argument("--n", type=int, default=None)
    e.add_argument("--m", type=int, default=None)
    e.add_argument("--family", type=int, default=100)

    s = sub.add_parser("shadow", parents=[common], help="shadow a seeded pseudo-orbit")
    s.add_argument("--space", choices=["torus", "sphere"], default="torus")
    s.add_argument("--length", type=int, default=200)

    a = sub.add_parser("area-check", parents=[common], help="area preservation statistics")
    a.add_argument("--samples", type=int, default=100_000)
    a.add_argument("--mc-samples", type=int, default=1_000_000)

    st = sub.add_parser("stability", parents=[common], help="finite-window xi-stability of a segment")
    st.add_argument("--map", default="anosov", help=f"one of {', '.join(sorted(SYSTEMS))}")
    st.add_argument("--x0", type=_pair, default=_pair("0.3,0.3"))
    st.add_argument("--direction", choices=["unstable", "stable"], default="unstable")
    st.add_argument("--length", type=float, default=None, help="segment length (default xi/10)")

    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    return p


def _config(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, xi=args.xi, delta=args.delta,
                              horizon=args.horizon, eta=args.eta, output_dir=args.out)


def _map(cfg):
    try:
        return build_map(cfg)
    except GeometryError as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def cmd_orbit(cfg, args):
    if args.map not in SYSTEMS:
        raise UsageError(f"unknown map {args.map!r}; choose from {', '.join(sorted(SYSTEMS))}")
    pmap = _map(cfg) if args.map in ("ttilde", "gpert") else None
    system = get_system(args.map, pmap)
    if args.start_level is not None:
        if args.map == "ttilde":
            x0 = fixed_point(args.start_level)
        elif args.map == "gpert":
            x0 = pmap.torus_fixed_point(args.start_level)
        else:
            raise UsageError("--start-level applies to the ttilde and gpert maps")
    else:
        x0 = np.zeros(2) if args.x0 is None else args.x0
    if args.steps < 0:
        raise UsageError("--steps must be nonnegative")
    cur = np.atleast_2d(np.asarray(x0, dtype=float))
    cur = project(cur, system.space)
    rows = []
    for k in range(args.steps + 1):
        rows.append((k, float(cur[0, 0]), float(cur[0, 1])))
        cur = system.forward(cur)
    header = ["step", "rep_x", "rep_y"] if system.space == "sphere" else ["step", "x", "y"]
    path = write_csv(Path(cfg.output_dir) / f"orbit_{args.map}.csv", header, rows)
    print(path)
    return EXIT_OK


def cmd_escape(cfg, args):
    pmap = _map(cfg)
    n = pmap.n0 if args.n is None else args.n
    m = n + 1 if args.m is None else args.m
    if not m > n >= pmap.n0:
        raise UsageError(f"need m > n >= n0 = {pmap.n0}, got n = {n}, m = {m}")
    if args.family < 0:
        raise UsageError("--family must be nonnegative")
    fam = random_monotone_chains(n, m, args.family, cfg.seed, cfg.eta)
    try:
        rep = class_separation(n, m, fam, pmap, cfg.eta)
    except PreconditionError as exc:
        raise UsageError(str(exc)) from None
    out = Path(cfg.output_dir)
    write_json(out / "certificates.json", {"config": cfg.to_dict(), **rep.to_dict()})
    # diameter envelope over the family, step by step up to the latest exit
    rows = []
    if fam:
        last = rep.max_exit or 0
        env = np.zeros(last + 1)
        for C in fam:
            for k, ch in enumerate(propagate_chain(ttilde_system(pmap), C, last, cfg.eta)):
                env[k] = max(env[k], ch.diam)
        rows = [(k, float(d)) for k, d in enumerate(env)]
    write_csv(out / "escape_diams.csv", ["step", "diam"], rows)
    print(dumps({"count": len(rep.certificates), "all_valid": rep.all_valid,
                 "max_exit": rep.max_exit}), end="")
    return EXIT_OK if rep.all_valid else EXIT_FAIL


def cmd_shadow(cfg, args):
    if args.length < 1:
        raise UsageError("--length must be at least 1")
    # the configured delta sizes the perturbation; shadowing uses its own default
    delta = args.delta if args.delta is not None else 1e-4
    system = anosov_system() if args.space == "torus" else sphere_system()
    x0 = np.random.default_rng(cfg.seed).random(2)
    po = make_pseudo_orbit(system, x0, args.length, delta, cfg.seed)
    res = shadow_solve(po) if args.space == "torus" else sphere_shadow(po)
    ok, dev = shadow_verify(system, po, res.point_exact, res.eps_bound)
    record = {
        "config": cfg.to_dict(),
        "space": args.space,
        "length": args.length,
        "delta": delta,
        **res.to_dict(),
        "verified": ok,
        "max_deviation": dev,
        "nominal_bound": nominal_bound(delta),
        "within_nominal_bound": res.eps_achieved <= nominal_bound(delta),
    }
    write_json(Path(cfg.output_dir) / f"shadow_{args.space}.json", record)
    print(dumps({k: record[k] for k in ("eps_achieved", "eps_bound", "verified")}), end="")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_area(cfg, args):
    pmap = _map(cfg)
    stats = verify_area(pmap, args.samples, cfg.seed, args.mc_samples)
    record = {"config": cfg.to_dict(), **stats.to_dict(), "passed": stats.passed()}
    write_json(Path(cfg.output_dir) / "area.json", record)
    print(dumps({"max_det_dev": stats.max_det_dev, "passed": stats.passed()}), end="")
    return EXIT_OK if stats.passed() else EXIT_FAIL


def cmd_stability(cfg, args):
    if args.map not in SYSTEMS:
        raise UsageError(f"unknown map {args.map!r}; choose from {', '.join(sorted(SYSTEMS))}")
    pmap = _map(cfg) if args.map in ("ttilde", "gpert") else None
    system = get_system(args.map, pmap)
    length = cfg.xi / 10 if args.length is None else args.length
    e = CAT.e_u if args.direction == "unstable" else CAT.e_s
    C = densify([args.x0, args.x0 + length * e], cfg.eta, system.space)
    rep = xi_stability_test(system, C, cfg.xi, cfg.horizon, cfg.eta)
    out = Path(cfg.output_dir)
    write_json(out / "stability.json", {"config": cfg.to_dict(), **rep.to_dict()})
    write_csv(out / "stability.csv", ["step", "diam"], list(zip(rep.steps, rep.diams)))
    print(dumps({"verdict": rep.verdict, "first_violation": rep.first_violation}), end="")
    return EXIT_OK


def cmd_verify(cfg, args):
    report = run_suite(cfg)
    write_json(Path(cfg.output_dir) / "verify.json", report)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


COMMANDS = {
    "orbit": cmd_orbit,
    "escape": cmd_escape,
    "shadow": cmd_shadow,
    "area-check": cmd_area,
    "stability": cmd_stability,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnwrapError as exc:
        print(f"numeric domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
