"""Experiment orchestration: validated JSON configuration, the end-to-end
reconstruction pipeline and deterministic artifact persistence.

Exit code conventions: 0 when the run stops by discrepancy or stagnation,
2 for configuration errors, 3 when the iteration cap is reached before the
discrepancy level, 4 for forward/adjoint solver failures.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, CoefficientField, clip_nonnegative, project
from .data import (
    DEFAULT_SAMPLE_COUNT,
    prefilter,
    synthesize_data,
    truth_field,
    TRUTH_FAMILIES,
)
from .errors import ConfigError, WestinvError
from .forward import manufactured_source
from .grids import (
    DIRICHLET,
    IMPEDANCE,
    NEUMANN,
    BoundaryCondition,
    MaterialParams,
    SolverOptions,
    SpatialGrid,
    TimeGrid,
)
from .inversion import (
    InversionContext,
    RegularizationSchedule,
    StoppingRule,
    halley_run,
    landweber_run,
    newton_lm_run,
)
from .spectra import svd_csv, svd_decay
from .trace import TimeTrace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MAX_ITER = 3
EXIT_SOLVER = 4

METHODS = ("landweber", "newton", "halley")
BASIS_ALIASES = {"gauss": "gaussian", "gaussian": "gaussian",
                 "hat": "hat", "haar": "haar"}

EXCITATIONS = {
    # excitation spatial profile f(x) and its second derivative
    "sine_half": (
        lambda x: np.sin(np.pi * x / 2),
        lambda x: -((np.pi / 2) ** 2) * np.sin(np.pi * x / 2),
    ),
}

TIME_PROFILES = {
    # beta(t), beta'(t), beta''(t); all vanish to first order at t = 0
    "t2": (lambda t: t**2, lambda t: 2 * t, lambda t: 2 * np.ones_like(t)),
    "t3": (lambda t: t**3, lambda t: 3 * t**2, lambda t: 6 * t),
    # smooth ramp to 1: keeps the pressure near its peak for most of the
    # window, which maximizes the coefficient signal in the trace
    "ramp": (
        lambda t: 0.5 * (1 - np.cos(np.pi * np.minimum(t, 1.0))),
        lambda t: 0.5 * np.pi * np.sin(np.pi * np.minimum(t, 1.0)),
        lambda t: 0.5 * np.pi**2 * np.cos(np.pi * np.minimum(t, 1.0))
        * (t <= 1.0),
    ),
}


@dataclass
class ExperimentConfig:
    """Validated experiment description (JSON schema version 1)."""

    nx: int = 101
    nt: int = 400
    t_final: float = 1.0
    c2: float = 1.0
    b: float = 0.2
    bc_left: str = DIRICHLET
    bc_right: str = NEUMANN
    basis_kind: str = "gaussian"
    n_basis: int = 41
    truth_family: str = "smooth_bump"
    truth_amplitude: float = 0.2
    truth_in_span: bool = False
    excitation: str = "sine_half"
    time_profile: str = "t2"
    noise: float = 0.01
    seed: int = 0
    sample_count: int = DEFAULT_SAMPLE_COUNT
    method: str = "newton"
    frozen: bool = True
    tau: float = 2.0
    alpha0: float | None = None
    theta: float = 0.5
    max_iter: int = 20
    mu: float | None = None
    diagnostics: bool = False
    obs_point: float = 1.0
    smoothing_s: int = 0

    def validate(self) -> None:
        checks = [
            (self.nx >= 3, "nx must be at least 3"),
            (self.nt >= 3, "nt must be at least 3"),
            (self.t_final > 0, "t_final must be positive"),
            (self.c2 > 0 and self.b > 0, "c2 and b must be positive"),
            (self.bc_left in (DIRICHLET, NEUMANN, IMPEDANCE),
             f"unknown left boundary kind {self.bc_left!r}"),
            (self.bc_right in (DIRICHLET, NEUMANN, IMPEDANCE),
             f"unknown right boundary kind {self.bc_right!r}"),
            (not (self.bc_left == NEUMANN and self.bc_right == NEUMANN),
             "pure Neumann conditions are not supported"),
            (self.basis_kind in BASIS_ALIASES,
             f"unknown basis {self.basis_kind!r}"),
            (self.n_basis >= 1, "n_basis must be at least 1"),
            (self.truth_family in TRUTH_FAMILIES,
             f"unknown truth family {self.truth_family!r}"),
            (self.excitation in EXCITATIONS,
             f"unknown excitation {self.excitation!r}"),
            (self.time_profile in TIME_PROFILES,
             f"unknown time profile {self.time_profile!r}"),
            (self.noise >= 0, "noise must be nonnegative"),
            (self.sample_count >= 4, "sample_count must be at least 4"),
            (self.method in METHODS, f"unknown method {self.method!r}"),
            (self.tau > 1, "tau must exceed 1"),
            (self.alpha0 is None or self.alpha0 > 0, "alpha0 must be positive"),
            (0 < self.theta < 1, "theta must lie in (0, 1)"),
            (self.max_iter >= 1, "max_iter must be at least 1"),
            (self.mu is None or self.mu > 0, "mu must be positive"),
            (self.smoothing_s in (0, 1), "smoothing_s must be 0 or 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "grid": {"nx": self.nx},
            "time": {"nt": self.nt, "t_final": self.t_final},
            "params": {"c2": self.c2, "b": self.b},
            "bc": {"left": self.bc_left, "right": self.bc_right},
            "basis": {"kind": self.basis_kind, "m": self.n_basis},
            "truth": {
                "family": self.truth_family,
                "amplitude": self.truth_amplitude,
                "in_span": self.truth_in_span,
            },
            "excitation": {"profile": self.excitation,
                           "time_profile": self.time_profile},
            "noise": self.noise,
            "seed": self.seed,
            "sample_count": self.sample_count,
            "method": self.method,
            "method_options": {
                "frozen": self.frozen,
                "tau": self.tau,
                "alpha0": self.alpha0,
                "theta": self.theta,
                "max_iter": self.max_iter,
                "mu": self.mu,
                "smoothing_s": self.smoothing_s,
            },
            "diagnostics": self.diagnostics,
            "obs_point": self.obs_point,
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if cfg.get("schema") != 1:
            raise ConfigError("config schema must be 1")
        try:
            opts = cfg.get("method_options", {})
            out = cls(
                nx=int(cfg.get("grid", {}).get("nx", 101)),
                nt=int(cfg.get("time", {}).get("nt", 400)),
                t_final=float(cfg.get("time", {}).get("t_final", 1.0)),
                c2=float(cfg.get("params", {}).get("c2", 1.0)),
                b=float(cfg.get("params", {}).get("b", 0.2)),
                bc_left=cfg.get("bc", {}).get("left", DIRICHLET),
                bc_right=cfg.get("bc", {}).get("right", NEUMANN),
                basis_kind=cfg.get("basis", {}).get("kind", "gaussian"),
                n_basis=int(cfg.get("basis", {}).get("m", 41)),
                truth_family=cfg.get("truth", {}).get("family", "smooth_bump"),
                truth_amplitude=float(
                    cfg.get("truth", {}).get("amplitude", 0.2)
                ),
                truth_in_span=bool(cfg.get("truth", {}).get("in_span", False)),
                excitation=cfg.get("excitation", {}).get("profile", "sine_half"),
                time_profile=cfg.get("excitation", {}).get("time_profile", "t2"),
                noise=float(cfg.get("noise", 0.01)),
                seed=int(cfg.get("seed", 0)),
                sample_count=int(cfg.get("sample_count", DEFAULT_SAMPLE_COUNT)),
                method=cfg.get("method", "newton"),
                frozen=bool(opts.get("frozen", True)),
                tau=float(opts.get("tau", 2.0)),
                alpha0=(None if opts.get("alpha0") is None
                        else float(opts["alpha0"])),
                theta=float(opts.get("theta", 0.5)),
                max_iter=int(opts.get("max_iter", 20)),
                mu=None if opts.get("mu") is None else float(opts["mu"]),
                diagnostics=bool(cfg.get("diagnostics", False)),
                obs_point=float(cfg.get("obs_point", 1.0)),
                smoothing_s=int(opts.get("smoothing_s", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
        out.validate()
        return out

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(cfg)


@dataclass
class ExperimentResult:
    """In-memory results of an experiment run."""

    config: ExperimentConfig
    report: object
    truth: CoefficientField
    exit_code: int
    delta: float
    eta: float
    sigma: np.ndarray | None = None
    q: float | None = None
    traces: dict = field(default_factory=dict)


def build_problem(cfg: ExperimentConfig):
    """Construct the grids, boundary conditions, source and truth field."""
    grid = SpatialGrid(cfg.nx)
    tgrid = TimeGrid(cfg.nt, cfg.t_final)
    params = MaterialParams(cfg.c2, cfg.b)
    bc = BoundaryCondition.from_kinds(cfg.bc_left, cfg.bc_right)
    basis = BasisSet(BASIS_ALIASES[cfg.basis_kind], cfg.n_basis)
    f, f_xx = EXCITATIONS[cfg.excitation]
    beta, beta_t, beta_tt = TIME_PROFILES[cfg.time_profile]
    source = manufactured_source(f, f_xx, beta, beta_t, beta_tt, params,
                                 grid, tgrid, bc)
    truth = truth_field(cfg.truth_family, grid, cfg.truth_amplitude)
    if cfg.truth_in_span:
        # project onto the basis, then clip: the iterates are clipped after
        # every step, so an attainable truth must be nonnegative as well
        coeffs = project(basis, truth.samples, grid)
        truth = clip_nonnegative(
            CoefficientField.from_coefficients(basis, coeffs, grid)
        )
    return grid, tgrid, params, bc, basis, source, truth


def run_inversion(cfg: ExperimentConfig):
    """Synthesize data and run the configured reconstruction method."""
    grid, tgrid, params, bc, basis, source, truth = build_problem(cfg)
    full, coarse, noisy = synthesize_data(
        truth, params, source, grid, tgrid, bc, cfg.obs_point, cfg.noise,
        cfg.seed, cfg.sample_count,
    )
    filtered = prefilter(noisy, tgrid.nt)
    eta = noisy.noise_level
    delta = np.sqrt(cfg.sample_count) * eta  # Euclidean norm on the samples

    ctx = InversionContext(params, grid, tgrid, bc, source, basis,
                           cfg.obs_point, SolverOptions(),
                           smoothing_s=cfg.smoothing_s)
    init = CoefficientField.from_coefficients(
        basis, np.zeros(basis.m), grid
    )
    stop = StoppingRule(cfg.tau, delta, cfg.max_iter)
    reg = (RegularizationSchedule(cfg.alpha0, cfg.theta)
           if cfg.alpha0 is not None else None)
    if cfg.method == "landweber":
        report = landweber_run(noisy, init, cfg.frozen, cfg.mu, stop, ctx,
                               truth=truth, data_on_grid=filtered)
    elif cfg.method == "newton":
        report = newton_lm_run(noisy, init, cfg.frozen, reg, stop, ctx,
                               truth=truth)
    else:
        report = halley_run(noisy, init, reg, stop, ctx, truth=truth)

    sigma = q = None
    if cfg.diagnostics:
        sigma, q = svd_decay(ctx.frozen_jacobian(noisy.times))

    exit_code = EXIT_OK if report.stop_reason in ("discrepancy", "stagnation") \
        else EXIT_MAX_ITER
    return ExperimentResult(
        cfg, report, truth, exit_code, delta, eta, sigma, q,
        traces={"clean": full, "coarse": coarse, "noisy": noisy,
                "filtered": filtered},
    )


def _trace_csv(trace: TimeTrace, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,h\n")
        for t, h in zip(trace.times, trace.values):
            fh.write(f"{t:.17g},{h:.17g}\n")


def write_artifacts(result: ExperimentResult, out_dir) -> None:
    """Persist the experiment artifacts to out_dir (deterministic bytes)."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _trace_csv(result.traces["clean"], os.path.join(out_dir, "trace_clean.csv"))
    _trace_csv(result.traces["noisy"], os.path.join(out_dir, "trace_noisy.csv"))
    _trace_csv(result.traces["filtered"],
               os.path.join(out_dir, "trace_filtered.csv"))

    report = result.report.to_dict()
    report.update({
        "method": cfg.method,
        "noise_level": cfg.noise,
        "eta": float(result.eta),
        "delta": float(result.delta),
        "noise_norm": "max-norm bound eta; discrepancy uses sqrt(ns)*eta "
                      "in the Euclidean sample norm",
        "seed": cfg.seed,
        "exit_code": result.exit_code,
    })
    if result.q is not None:
        report["svd_decay_rate"] = float(result.q)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    result.report.history_csv(os.path.join(out_dir, "history.csv"))

    grid = result.truth.grid
    rec = result.report.final.samples
    with open(os.path.join(out_dir, "kappa_final.csv"), "w") as fh:
        fh.write("x,kappa_true,kappa_rec\n")
        for x, kt, kr in zip(grid.nodes, result.truth.samples, rec):
            fh.write(f"{x:.17g},{kt:.17g},{kr:.17g}\n")

    if result.sigma is not None:
        svd_csv(result.sigma, os.path.join(out_dir, "svd.csv"))


def run_experiment(cfg: ExperimentConfig, out_dir) -> int:
    """End-to-end pipeline; returns the process exit code."""
    try:
        cfg.validate()
    except ConfigError:
        raise
    try:
        result = run_inversion(cfg)
    except ConfigError:
        raise
    except WestinvError as exc:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump({"error": str(exc), "exit_code": EXIT_SOLVER}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
        return EXIT_SOLVER
    write_artifacts(result, out_dir)
    return result.exit_code
