"""Command-line entry point: ``bbtrack {solve,sweep,verify,fields,probe}``.

Exit codes: 0 success, 1 error (configuration, IO, solver), 2 iteration cap hit.
"""

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .checks import SUITES
from .config import initial_state, load_config, load_trajectory
from .control import Control, ControlBounds, ObjectiveContext, eval_J, q_l1
from .errors import BbtrackError, ConfigError
from .fieldio import read_field, write_field
from .fields import divergence, norm
from .grid import Grid, StaggeredField
from .instances import overshoot_instance, recoverable_instance
from .ns import solve_ns
from .optimizer import solve
from .stability import (SWEEP_COLUMNS, XI_NORM_DISCLOSURE, curvature_probe, growth_exponent_probe,
                        rate_experiment)

log = logging.getLogger("bbtrack")

EXIT_OK, EXIT_ERROR, EXIT_CAP = 0, 1, 2


def _header(cfg):
    return {"config_hash": cfg.config_hash, "xi_norm": XI_NORM_DISCLOSURE}


def _csv_preamble(fh, cfg):
    fh.write(f"# config_hash={cfg.config_hash}\n# {XI_NORM_DISCLOSURE}\n")


def build_problem(cfg):
    """Return (ctx, u_start, u_reference or None) for a validated RunConfig."""
    g = cfg.grid
    y0 = initial_state(cfg)
    ref = None
    if cfg.instance == "recoverable":
        ctx, ref = recoverable_instance(g.nx, g.ny, g.nt, g.T, cfg.ns.nu, cfg.amplitude, y0, cfg.self_consistent)
    elif cfg.instance == "overshoot":
        ctx, ref = overshoot_instance(g.nx, g.ny, g.nt, g.T, cfg.ns.nu, cfg.amplitude, cfg.beta, y0)
    else:
        ctx = ObjectiveContext(cfg.ns, y0, load_trajectory(cfg.target_dir, g))
    ctx = ObjectiveContext(cfg.ns, y0, ctx.yd, eps=cfg.eps)
    bounds = ref.bounds if ref is not None else ControlBounds.box(g, -cfg.amplitude, cfg.amplitude)
    start = {"midpoint": bounds.midpoint(), "lower": bounds.ua, "upper": bounds.ub}[cfg.start]
    return ctx, Control(g, start, bounds), ref


def _reference(cfg, ctx, u0, ref):
    if ref is not None:
        return ref
    log.info("no reference control; solving the unperturbed problem first")
    return solve(ctx, cfg.optimizer, u0).u_star


def cmd_solve(args):
    cfg = load_config(args.config)
    ctx, u0, ref = build_problem(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    J0, _ = eval_J(ctx, u0)
    rep = solve(ctx, cfg.optimizer, u0)
    extra = dict(_header(cfg), J_u0=J0)
    if ref is not None:
        extra["l1_to_reference"] = q_l1(cfg.grid, rep.u_star.values - ref.values)
    with open(os.path.join(cfg.out_dir, "report.json"), "w") as fh:
        fh.write(rep.to_json(**extra))
    with open(os.path.join(cfg.out_dir, "history.csv"), "w") as fh:
        _csv_preamble(fh, cfg)
        fh.write(rep.history_csv())
    np.savez(os.path.join(cfg.out_dir, "control.npz"), u=rep.u_star.values, ua=rep.u_star.bounds.ua,
             ub=rep.u_star.bounds.ub, config_hash=cfg.config_hash, xi_norm=XI_NORM_DISCLOSURE)
    state_dir = os.path.join(cfg.out_dir, "state")
    solve_ns(cfg.ns, rep.u_star.values, ctx.y0, checkpoint_dir=state_dir)
    with open(os.path.join(state_dir, "manifest.json"), "w") as fh:
        json.dump(dict(_header(cfg), snapshots=["y_%06d.fld" % n for n in range(cfg.grid.nt + 1)]), fh, indent=2)
    print(f"J_star={rep.J_star:.6e} sigma={rep.sigma_final:.3e} tol={rep.sigma_tol:.3e} "
          f"iterations={rep.iterations} singular_measure={rep.singular_measure:.4f}")
    if rep.sigma_final <= rep.sigma_tol:
        return EXIT_OK
    return EXIT_CAP if rep.cap_hit else EXIT_ERROR


def write_sweep(path, records, cfg):
    rows = sorted(records, key=lambda r: r["spec_id"])
    with open(path, "w", newline="") as fh:
        _csv_preamble(fh, cfg)
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else (repr(float(r[k])) if k != "spec_id" else r[k]))
                        for k in SWEEP_COLUMNS})


def cmd_sweep(args):
    cfg = load_config(args.config)
    positive = [s for s in cfg.specs if s.total_size > 0]
    if len(positive) < 3:
        raise ConfigError(f"sweep.spec: a rate fit needs at least 3 specs with positive size, got {len(positive)}")
    workers = args.workers or cfg.workers
    ctx, u0, ref = build_problem(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    u_bar = _reference(cfg, ctx, u0, ref)
    mu_hat = None
    if not args.no_probe:
        mu_hat, _ = growth_exponent_probe(ctx, u_bar, cfg.distances, cfg.samples, seed=cfg.seed)
    opt = cfg.optimizer if cfg.optimizer.sigma_tol is not None else replace(cfg.optimizer, sigma_tol=1e-13)
    fit, records = rate_experiment(ctx, u_bar, cfg.specs, opt, workers=workers, mu_hat=mu_hat)
    write_sweep(os.path.join(cfg.out_dir, "sweep.csv"), records, cfg)
    with open(os.path.join(cfg.out_dir, "ratefit.json"), "w") as fh:
        fh.write(fit.to_json(**_header(cfg)))
    print(f"slope={fit.slope:.4f} r2={fit.r2:.4f} intercept={fit.intercept:.4f} n_points={fit.n_points} "
          f"mu_hat={mu_hat} excluded={fit.excluded_ids}")
    return EXIT_OK


def cmd_verify(args):
    checks = SUITES[args.suite]()
    for c in checks:
        print(c.row())
    ok = all(c.passed for c in checks)
    print(f"{args.suite}: {'all checks passed' if ok else 'some checks failed'}")
    return EXIT_OK if ok else EXIT_ERROR


def _load_any(path):
    if path.endswith(".npz"):
        with np.load(path) as z:
            u, v = z["u_faces"], z["v_faces"]
        return StaggeredField(Grid(v.shape[0], u.shape[1]), u, v)
    return read_field(path)


def cmd_fields(args):
    if args.action == "inspect":
        f = _load_any(args.path)
        g = f.grid
        info = {"nx": g.nx, "ny": g.ny, "hx": g.hx, "hy": g.hy, "L2": norm(f, "L2"), "H1": norm(f, "H1"),
                "Linf": norm(f, "Linf"), "max_abs_div": float(np.abs(divergence(f).values).max())}
        print(json.dumps(info, indent=2))
        return EXIT_OK
    f = _load_any(args.src)
    if args.dst.endswith(".npz"):
        np.savez(args.dst, u_faces=f.u_faces, v_faces=f.v_faces)
    else:
        write_field(args.dst, f)
    print(f"wrote {args.dst}")
    return EXIT_OK


def cmd_probe(args):
    cfg = load_config(args.config)
    ctx, u0, ref = build_problem(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    u_bar = _reference(cfg, ctx, u0, ref)
    if args.kind == "growth":
        mu_hat, table = growth_exponent_probe(ctx, u_bar, cfg.distances, cfg.samples, seed=cfg.seed)
        out = dict(_header(cfg), mu_hat=mu_hat, table=table)
        print(f"mu_hat={mu_hat:.4f}")
    else:
        mu = args.mu
        table = curvature_probe(ctx, u_bar, cfg.distances, cfg.samples, mu=mu, thetas=cfg.thetas, seed=cfg.seed)
        out = dict(_header(cfg), mu=mu, table=table)
        finite = [r["ratio"] for r in table if r["ratio"] is not None]
        print(f"rows={len(table)} max_ratio={max(finite) if finite else float('nan'):.4e}")
    with open(os.path.join(cfg.out_dir, f"{args.kind}.json"), "w") as fh:
        json.dump(out, fh, indent=2)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bbtrack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="optimize the tracking problem of a config")
    s.add_argument("config")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("sweep", help="perturbation sweep and rate fit")
    s.add_argument("config")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--no-probe", action="store_true", help="skip the growth probe (mu_hat left empty)")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("verify", help="run a built-in invariant suite")
    s.add_argument("suite", choices=sorted(SUITES))
    s.set_defaults(func=cmd_verify)
    s = sub.add_parser("fields", help="inspect or convert field snapshots")
    fs = s.add_subparsers(dest="action", required=True)
    i = fs.add_parser("inspect")
    i.add_argument("path")
    c = fs.add_parser("convert")
    c.add_argument("src")
    c.add_argument("dst")
    s.set_defaults(func=cmd_fields)
    s = sub.add_parser("probe", help="growth or curvature probe around the reference control")
    s.add_argument("kind", choices=("growth", "curvature"))
    s.add_argument("config")
    s.add_argument("--mu", type=float, default=1.0)
    s.set_defaults(func=cmd_probe)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; the contract reserves 2 for the iteration cap
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except BbtrackError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
