"""Command-line interface: data synthesis, reconstruction, diagnostics,
a manufactured-solution convergence study and concurrent parameter sweeps."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .data import synthesize_data
from .errors import ConfigError, WestinvError
from .experiment import (
    EXIT_CONFIG,
    EXIT_SOLVER,
    ExperimentConfig,
    _trace_csv,
    build_problem,
    run_experiment,
)
from .forward import manufactured_source, observe, solve_forward
from .grids import BoundaryCondition, MaterialParams, SpatialGrid, TimeGrid
from .inversion import InversionContext
from .spectra import SpectralData, pole_distinctness, svd_csv, svd_decay


def _add_common_flags(parser):
    parser.add_argument("--config", help="JSON config file (schema 1)")
    parser.add_argument("--method", choices=["landweber", "newton", "halley"])
    parser.add_argument("--noise", type=float, help="relative noise level")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--basis", choices=["hat", "gauss", "haar"])
    parser.add_argument("--n-basis", type=int, default=None,
                        help="basis size (default 41)")
    parser.add_argument("--tau", type=float, default=None,
                        help="discrepancy parameter (default 2.0)")
    parser.add_argument("--alpha0", type=float, default=None)
    parser.add_argument("--theta", type=float, default=None,
                        help="regularization decay factor (default 0.5)")
    parser.add_argument("--max-iter", type=int, default=None)
    parser.add_argument("--out", default="out", help="output directory")


def _config_from_args(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {
        "method": getattr(args, "method", None),
        "noise": getattr(args, "noise", None),
        "seed": getattr(args, "seed", None),
        "basis_kind": getattr(args, "basis", None),
        "n_basis": getattr(args, "n_basis", None),
        "tau": getattr(args, "tau", None),
        "alpha0": getattr(args, "alpha0", None),
        "theta": getattr(args, "theta", None),
        "max_iter": getattr(args, "max_iter", None),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg


def cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    grid, tgrid, params, bc, basis, source, truth = build_problem(cfg)
    full, coarse, noisy = synthesize_data(
        truth, params, source, grid, tgrid, bc, cfg.obs_point, cfg.noise,
        cfg.seed, cfg.sample_count,
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _trace_csv(full, os.path.join(args.out, "trace_clean.csv"))
    _trace_csv(noisy, os.path.join(args.out, "trace_noisy.csv"))
    print(f"wrote clean and noisy traces to {args.out} "
          f"(eta = {noisy.noise_level:.6g})")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _config_from_args(args)
    code = run_experiment(cfg, args.out)
    with open(os.path.join(args.out, "report.json")) as fh:
        report = json.load(fh)
    if "error" in report:
        print(f"solver failure: {report['error']}")
    else:
        print(f"{cfg.method}: stopped by {report['stop_reason']} after "
              f"{report['iterations']} recorded iterates "
              f"(final residual {report['residuals'][-1]:.6g})")
    return code


def cmd_diagnose(args) -> int:
    cfg = _config_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    grid, tgrid, params, bc, basis, source, truth = build_problem(cfg)
    if args.what == "svd":
        ctx = InversionContext(params, grid, tgrid, bc, source, basis,
                               cfg.obs_point)
        sample_times = np.linspace(0.0, tgrid.t_final, cfg.sample_count)
        sigma, q = svd_decay(ctx.frozen_jacobian(sample_times))
        svd_csv(sigma, os.path.join(args.out, "svd.csv"))
        print(f"sigma_max = {sigma[0]:.6g}, sigma_min = {sigma[-1]:.6g}, "
              f"fitted geometric rate q = {q:.6g}")
        return 0
    spec = SpectralData.build(bc, args.count, params.b, params.c2)
    report = {
        "eigenvalues": [float(v) for v in spec.eigenvalues],
        "bc": spec.bc_tag,
        "poles": spec.pole_table(),
        "distinctness": pole_distinctness(spec),
    }
    path = os.path.join(args.out, "poles.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.count} pole pairs to {path} "
          f"(distinct: {report['distinctness']['distinct']})")
    return 0


def cmd_convergence_study(args) -> int:
    cfg = _config_from_args(args)
    params = MaterialParams(cfg.c2, cfg.b)
    bc = BoundaryCondition.from_kinds(cfg.bc_left, cfg.bc_right)
    f = lambda x: np.sin(np.pi * x / 2)
    f_xx = lambda x: -((np.pi / 2) ** 2) * np.sin(np.pi * x / 2)
    rows = []
    prev_err = None
    for level in range(args.levels):
        nx = (args.nx0 - 1) * 2**level + 1
        nt = args.nt0 * 2**level
        grid, tgrid = SpatialGrid(nx), TimeGrid(nt, cfg.t_final)
        source = manufactured_source(
            f, f_xx, lambda t: t**2, lambda t: 2 * t,
            lambda t: 2 * np.ones_like(t), params, grid, tgrid, bc,
        )
        state = solve_forward(params, None, source, grid, tgrid, bc)
        exact = f(grid.nodes)[:, None] * (tgrid.times**2)[None, :]
        err = float(np.max(np.abs(state.values - exact)))
        order = np.log2(prev_err / err) if prev_err else float("nan")
        rows.append((nx, nt, err, order))
        prev_err = err
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "convergence.csv")
    with open(path, "w") as fh:
        fh.write("nx,nt,err_linf,order\n")
        for nx, nt, err, order in rows:
            fh.write(f"{nx},{nt},{err:.17g},{order:.17g}\n")
    for nx, nt, err, order in rows:
        print(f"nx={nx:5d} nt={nt:6d}  err={err:.4e}  order={order:.3f}")
    return 0


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("sweep requires --config pointing at a run list")
    with open(args.config) as fh:
        spec = json.load(fh)
    runs = spec.get("runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigError('sweep config must contain a nonempty "runs" list')
    jobs = []
    for i, entry in enumerate(runs):
        name = entry.get("name", f"run{i:03d}")
        cfg = ExperimentConfig.from_dict(entry.get("config", entry))
        jobs.append((name, cfg, os.path.join(args.out, name)))
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        codes = list(pool.map(lambda j: run_experiment(j[1], j[2]), jobs))
    for (name, _, out_dir), code in zip(jobs, codes):
        print(f"{name}: exit {code} -> {out_dir}")
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="westinv",
        description="Reconstruct the space-dependent nonlinearity coefficient "
                    "of the 1-D Westervelt equation from boundary time traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate clean and noisy traces")
    _add_common_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct", help="run a reconstruction")
    _add_common_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("diagnose", help="ill-posedness diagnostics")
    p.add_argument("what", choices=["svd", "poles"])
    p.add_argument("--count", type=int, default=20,
                   help="number of eigenvalues for the pole table")
    _add_common_flags(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("convergence-study",
                       help="manufactured-solution refinement study")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--nx0", type=int, default=26)
    p.add_argument("--nt0", type=int, default=50)
    _add_common_flags(p)
    p.set_defaults(func=cmd_convergence_study)

    p = sub.add_parser("sweep", help="run many configs concurrently")
    p.add_argument("--jobs", type=int, default=4)
    _add_common_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WestinvError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
