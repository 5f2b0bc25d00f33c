"""Regularized iterative reconstruction of the nonlinearity coefficient:
(frozen) Landweber, (frozen) Levenberg-Marquardt / Newton, frozen Halley
predictor-corrector, Tikhonov gradient and the discrepancy stopping rule.

The data space is the vector of trace samples at the measurement times with
the Euclidean norm; the recorded noise level delta must be expressed in that
norm (the harness converts the per-sample bound eta to sqrt(ns) * eta).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, CoefficientField, clip_nonnegative, project
from .derivatives import (
    Direction,
    JacobianMatrix,
    apply_gradient,
    assemble_directional_hessian,
    assemble_jacobian,
    sample_trace,
    solve_adjoint,
)
from .errors import DivergenceError, LinearSolveError
from .forward import (
    SourceTerm,
    StateField,
    kappa_samples,
    second_time_derivative_of_square,
    solve_forward,
)
from .grids import (
    BoundaryCondition,
    MaterialParams,
    SolverOptions,
    SpatialGrid,
    TimeGrid,
)
from .laplacian import build_laplacian
from .trace import TimeTrace

STAGNATION_TOL = 1e-10
STAGNATION_WINDOW = 5


@dataclass(frozen=True)
class RegularizationSchedule:
    """Geometrically decaying regularization parameters alpha_n = theta^n alpha0."""

    alpha0: float
    theta: float = 0.5

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")

    def alpha(self, n: int) -> float:
        return self.theta**n * self.alpha0


@dataclass(frozen=True)
class StoppingRule:
    """Discrepancy principle parameters and the iteration cap."""

    tau: float = 2.0
    delta: float = 0.0
    max_iter: int = 50

    def __post_init__(self):
        if not self.tau > 1:
            raise ValueError("tau must exceed 1")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class InversionReport:
    """Per-iteration history of an inversion run."""

    iterates: list  # coefficient vectors
    residuals: list
    errors_linf: list
    errors_l2: list
    stop_index: int
    stop_reason: str  # discrepancy | max-iter | stagnation
    final: CoefficientField

    def to_dict(self) -> dict:
        return {
            "iterations": len(self.residuals),
            "residuals": [float(r) for r in self.residuals],
            "errors_linf": [float(e) for e in self.errors_linf],
            "errors_l2": [float(e) for e in self.errors_l2],
            "stop_index": self.stop_index,
            "stop_reason": self.stop_reason,
            "final_coefficients": (
                [float(c) for c in self.final.coefficients]
                if self.final.coefficients is not None
                else None
            ),
        }

    def history_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,residual,err_linf,err_l2\n")
            for k, res in enumerate(self.residuals):
                linf = self.errors_linf[k] if self.errors_linf else float("nan")
                l2 = self.errors_l2[k] if self.errors_l2 else float("nan")
                fh.write(f"{k},{res:.17g},{linf:.17g},{l2:.17g}\n")


@dataclass
class InversionContext:
    """Everything a reconstruction run needs besides the data: the forward
    problem, the basis, the observation point and the frozen linearization
    point (kappa0 = 0 by default).  Frozen quantities are cached lazily."""

    params: MaterialParams
    grid: SpatialGrid
    tgrid: TimeGrid
    bc: BoundaryCondition
    source: SourceTerm
    basis: BasisSet
    obs_point: float = 1.0
    opts: SolverOptions = field(default_factory=SolverOptions)
    kappa_frozen: np.ndarray | None = None
    smoothing_s: int = 0
    _operator: object = field(default=None, repr=False)
    _frozen_base: StateField | None = field(default=None, repr=False)
    _frozen_jacobian: JacobianMatrix | None = field(default=None, repr=False)
    _frozen_psq_tt: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kappa_frozen is None:
            self.kappa_frozen = np.zeros(self.grid.nx)
        self.kappa_frozen = kappa_samples(self.kappa_frozen, self.grid)

    @property
    def operator(self):
        if self._operator is None:
            self._operator = build_laplacian(self.grid, self.bc)
        return self._operator

    @property
    def obs_index(self) -> int:
        return self.grid.node_index(self.obs_point)

    def simulate(self, kappa) -> StateField:
        return solve_forward(
            self.params, kappa, self.source, self.grid, self.tgrid, self.bc,
            self.opts, self.operator,
        )

    def residual_vector(self, data: TimeTrace, state: StateField) -> np.ndarray:
        model = sample_trace(
            state.values[self.obs_index, :], self.tgrid, data.times
        )
        return data.values - model

    def frozen_base(self) -> StateField:
        if self._frozen_base is None:
            self._frozen_base = self.simulate(self.kappa_frozen)
        return self._frozen_base

    def frozen_jacobian(self, sample_times: np.ndarray) -> JacobianMatrix:
        if self._frozen_jacobian is None:
            self._frozen_jacobian = assemble_jacobian(
                self.kappa_frozen, self.basis, self.params, self.grid,
                self.tgrid, self.bc, self.source, self.obs_point,
                sample_times, self.opts, base=self.frozen_base(),
            )
        return self._frozen_jacobian

    def frozen_psq_tt(self) -> np.ndarray:
        if self._frozen_psq_tt is None:
            self._frozen_psq_tt = second_time_derivative_of_square(
                self.frozen_base()
            )
        return self._frozen_psq_tt

    def adjoint_direction(
        self, y_grid: np.ndarray, base: StateField, kappa, psq_tt: np.ndarray
    ) -> Direction:
        """F'(kappa)* applied to a solver-grid residual y."""
        a = solve_adjoint(
            base, kappa, TimeTrace(self.tgrid.times, y_grid),
            self.params, self.grid, self.tgrid, self.bc,
            operator=self.operator,
        )
        return apply_gradient(
            a, psq_tt, self.smoothing_s, self.grid, self.tgrid,
            operator=self.operator, bc=self.bc,
        )


def discrepancy_stop(residual_norms, delta: float, tau: float):
    """Smallest index with residual <= tau * delta, or None."""
    if not tau > 1:
        raise ValueError("tau must exceed 1")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    threshold = tau * delta
    for k, r in enumerate(residual_norms):
        if r <= threshold:
            return k
    return None


def default_alpha0(jacobian: JacobianMatrix, residual0: np.ndarray) -> float:
    """Scale-aware default alpha0 = ||J^T r0||_inf."""
    value = float(np.max(np.abs(jacobian.entries.T @ residual0)))
    return value if value > 0 else 1.0


def power_iteration_sigma_max(entries: np.ndarray, iters: int = 100) -> float:
    """Largest singular value of a matrix by power iteration on J^T J,
    deterministic start vector."""
    v = np.ones(entries.shape[1])
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(iters):
        w = entries.T @ (entries @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        sigma2 = norm
        v = w / norm
    return float(np.sqrt(sigma2))


def _error_norms(kappa: CoefficientField, truth, grid: SpatialGrid):
    if truth is None:
        return float("nan"), float("nan")
    t = kappa_samples(truth, grid)
    diff = kappa.samples - t
    linf = float(np.max(np.abs(diff)))
    l2 = float(np.sqrt(np.trapezoid(diff**2, dx=grid.dx)))
    return linf, l2


def _stagnated(residuals) -> bool:
    # relative to the initial residual, so runs that have converged to the
    # machine floor terminate even though the floor values jitter
    if len(residuals) < STAGNATION_WINDOW + 1:
        return False
    recent = residuals[-(STAGNATION_WINDOW + 1):]
    scale = max(abs(residuals[0]), 1e-300)
    return max(abs(recent[i + 1] - recent[i]) for i in range(STAGNATION_WINDOW)) \
        < STAGNATION_TOL * scale


def _solve_regularized(J: np.ndarray, alpha: float, rhs: np.ndarray) -> np.ndarray:
    normal = J.T @ J + alpha * np.eye(J.shape[1])
    cond = np.linalg.cond(normal)
    if not np.isfinite(cond) or cond > 1e15:
        raise LinearSolveError(
            f"regularized normal matrix is numerically singular "
            f"(cond = {cond:.3g}, alpha = {alpha:.3g})"
        )
    return np.linalg.solve(normal, J.T @ rhs)


def _run_loop(data, init, ctx, stop, truth, step_fn, divergence_guard=False):
    """Shared iteration driver: record, check stopping, update via step_fn."""
    kappa = init
    iterates, residuals, errs_inf, errs_l2 = [], [], [], []
    reason = "max-iter"
    while True:
        state = ctx.simulate(kappa)
        r = ctx.residual_vector(data, state)
        rnorm = float(np.linalg.norm(r))
        iterates.append(
            np.array(kappa.coefficients)
            if kappa.coefficients is not None
            else kappa.samples.copy()
        )
        residuals.append(rnorm)
        linf, l2 = _error_norms(kappa, truth, ctx.grid)
        errs_inf.append(linf)
        errs_l2.append(l2)
        if divergence_guard and rnorm > 10 * residuals[0] and residuals[0] > 0:
            raise DivergenceError(
                f"residual {rnorm:.3g} exceeds 10x its initial value"
            )
        if rnorm <= stop.tau * stop.delta:
            reason = "discrepancy"
            break
        if _stagnated(residuals):
            reason = "stagnation"
            break
        if len(residuals) - 1 >= stop.max_iter:
            reason = "max-iter"
            break
        kappa = step_fn(len(residuals) - 1, kappa, state, r)
    return InversionReport(
        iterates, residuals, errs_inf, errs_l2,
        stop_index=len(residuals) - 1, stop_reason=reason, final=kappa,
    )


def landweber_run(
    data: TimeTrace,
    init: CoefficientField,
    frozen: bool,
    mu: float | None,
    stop: StoppingRule,
    ctx: InversionContext,
    truth=None,
    data_on_grid: TimeTrace | None = None,
) -> InversionReport:
    """Landweber iteration kappa_{n+1} = clip(kappa_n + mu * F'(.)^* (h - F)),
    with the gradient applied through the adjoint PDE solve (at kappa0 when
    frozen).  mu = None selects 0.9 / sigma_max^2 from power iteration on the
    frozen Jacobian."""
    from .data import prefilter  # deferred: data module imports forward

    if data_on_grid is None:
        data_on_grid = prefilter(data, ctx.tgrid.nt)
    if mu is None:
        J = ctx.frozen_jacobian(data.times)
        sigma_max = power_iteration_sigma_max(J.entries)
        mu = 0.9 / sigma_max**2

    base0 = ctx.frozen_base() if frozen else None
    psq0 = ctx.frozen_psq_tt() if frozen else None

    def step(n, kappa, state, r):
        if frozen:
            base, kap_lin, psq = base0, ctx.kappa_frozen, psq0
        else:
            base, kap_lin = state, kappa.samples
            psq = second_time_derivative_of_square(state)
        y = data_on_grid.values - state.values[ctx.obs_index, :]
        g = ctx.adjoint_direction(y, base, kap_lin, psq)
        samples = kappa.samples + mu * g.samples
        return clip_nonnegative(
            CoefficientField.from_samples(samples, ctx.grid, ctx.basis)
        )

    return _run_loop(data, init, ctx, stop, truth, step, divergence_guard=True)


def newton_lm_run(
    data: TimeTrace,
    init: CoefficientField,
    frozen: bool,
    reg: RegularizationSchedule | None,
    stop: StoppingRule,
    ctx: InversionContext,
    truth=None,
) -> InversionReport:
    """Levenberg-Marquardt / regularized (frozen) Newton iteration
    c_{n+1} = c_n + (J^T J + alpha_n I)^{-1} J^T (h - F(kappa_n))."""
    J_frozen = ctx.frozen_jacobian(data.times) if frozen else None

    reg_holder = [reg]

    def step(n, kappa, state, r):
        if frozen:
            J = J_frozen
        else:
            J = assemble_jacobian(
                kappa.samples, ctx.basis, ctx.params, ctx.grid, ctx.tgrid,
                ctx.bc, ctx.source, ctx.obs_point, data.times, ctx.opts,
                base=state, keep_sensitivities=False,
            )
        if reg_holder[0] is None:
            reg_holder[0] = RegularizationSchedule(default_alpha0(J, r))
        c_step = _solve_regularized(J.entries, reg_holder[0].alpha(n), r)
        coeffs = kappa.coefficients + c_step
        return clip_nonnegative(
            CoefficientField.from_coefficients(ctx.basis, coeffs, ctx.grid)
        )

    return _run_loop(data, init, ctx, stop, truth, step)


def halley_run(
    data: TimeTrace,
    init: CoefficientField,
    reg_predictor: RegularizationSchedule | None,
    stop: StoppingRule,
    ctx: InversionContext,
    truth=None,
    reg_corrector: RegularizationSchedule | None = None,
) -> InversionReport:
    """Frozen Halley predictor-corrector: the predictor is the frozen
    Levenberg-Marquardt step d; the corrector re-solves against the same
    residual with system matrix J + H_d / 2.  The corrector schedule defaults
    to the predictor's."""
    J = ctx.frozen_jacobian(data.times)
    pred_holder = [reg_predictor]

    def step(n, kappa, state, r):
        if pred_holder[0] is None:
            pred_holder[0] = RegularizationSchedule(default_alpha0(J, r))
        reg_p = pred_holder[0]
        reg_c = reg_corrector or reg_p
        d_coeffs = _solve_regularized(J.entries, reg_p.alpha(n), r)
        d = Direction(
            kappa_samples(
                CoefficientField.from_coefficients(ctx.basis, d_coeffs, ctx.grid),
                ctx.grid,
            ),
            d_coeffs,
        )
        H = assemble_directional_hessian(
            d, ctx.kappa_frozen, ctx.basis, ctx.params, ctx.grid, ctx.tgrid,
            ctx.bc, ctx.source, ctx.obs_point, data.times,
            base=ctx.frozen_base(), jacobian=J, opts=ctx.opts,
        )
        J2 = J.entries + 0.5 * H.entries
        c_step = _solve_regularized(J2, reg_c.alpha(n), r)
        coeffs = kappa.coefficients + c_step
        return clip_nonnegative(
            CoefficientField.from_coefficients(ctx.basis, coeffs, ctx.grid)
        )

    return _run_loop(data, init, ctx, stop, truth, step)


def tikhonov_gradient(
    kappa: CoefficientField,
    prior,
    alpha: float,
    data: TimeTrace,
    s: int,
    ctx: InversionContext,
    data_on_grid: TimeTrace | None = None,
) -> Direction:
    """Gradient of the Tikhonov functional,
    J_alpha'(kappa) = F'(kappa)^* (F(kappa) - h) + alpha (kappa - prior)."""
    from .data import prefilter

    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if data_on_grid is None:
        data_on_grid = prefilter(data, ctx.tgrid.nt)
    state = ctx.simulate(kappa)
    y = state.values[ctx.obs_index, :] - data_on_grid.values
    saved_s = ctx.smoothing_s
    ctx.smoothing_s = s
    try:
        g = ctx.adjoint_direction(
            y, state, kappa.samples, second_time_derivative_of_square(state)
        )
    finally:
        ctx.smoothing_s = saved_s
    prior_samples = kappa_samples(prior, ctx.grid)
    return Direction(g.samples + alpha * (kappa.samples - prior_samples))
