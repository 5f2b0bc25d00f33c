"""Synthetic data generation, noise injection and trace prefiltering."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .basis import CoefficientField
from .errors import TooFewSamplesError
from .forward import SourceTerm, observe, solve_forward
from .grids import (
    BoundaryCondition,
    MaterialParams,
    SolverOptions,
    SpatialGrid,
    TimeGrid,
)
from .trace import TimeTrace

DEFAULT_SAMPLE_COUNT = 50


def downsample(trace: TimeTrace, count: int = DEFAULT_SAMPLE_COUNT) -> TimeTrace:
    """Linear-interpolation resampling onto `count` equally spaced points
    on [0, T]."""
    times = np.linspace(trace.times[0], trace.times[-1], count)
    values = np.interp(times, trace.times, trace.values)
    return TimeTrace(times, values, trace.noise_level, trace.provenance)


def add_noise(trace: TimeTrace, level: float, seed: int) -> TimeTrace:
    """Add i.i.d. uniform noise on [-eta, eta] with eta = level * max|h|.

    The recorded noise level is eta itself (max-norm convention).  The RNG is
    the counter-based Philox generator, fully determined by the seed.
    """
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    if level == 0:
        return TimeTrace(trace.times.copy(), trace.values.copy(), 0.0,
                         "synthetic-clean")
    eta = level * np.max(np.abs(trace.values))
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.uniform(-eta, eta, size=trace.values.shape)
    return TimeTrace(trace.times.copy(), trace.values + noise, eta,
                     "synthetic-noisy")


def synthesize_data(
    truth,
    params: MaterialParams,
    source: SourceTerm,
    grid: SpatialGrid,
    tgrid: TimeGrid,
    bc: BoundaryCondition,
    obs_point: float,
    noise_level: float,
    seed: int,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    opts: SolverOptions | None = None,
):
    """Forward-simulate the truth coefficient, observe, downsample to the
    coarse measurement grid and add uniform noise.

    Returns (clean full-resolution trace, clean coarse trace, noisy coarse
    trace).
    """
    state = solve_forward(params, truth, source, grid, tgrid, bc, opts)
    full = observe(state, obs_point)
    coarse = downsample(full, sample_count)
    noisy = add_noise(coarse, noise_level, seed)
    return full, coarse, noisy


def prefilter(raw: TimeTrace, target_nt: int) -> TimeTrace:
    """Smooth a coarse trace with a centered moving average (window 3, the
    endpoints kept as-is so affine traces pass through unchanged) and
    cubic-spline it onto the solver time grid with target_nt + 1 levels."""
    if len(raw) < 4:
        raise TooFewSamplesError("prefilter needs at least 4 samples")
    smooth = raw.values.copy()
    smooth[1:-1] = (raw.values[:-2] + raw.values[1:-1] + raw.values[2:]) / 3.0
    spline = CubicSpline(raw.times, smooth)
    times = np.linspace(raw.times[0], raw.times[-1], target_nt + 1)
    return TimeTrace(times, spline(times), raw.noise_level, "prefiltered")


def smooth_bump(grid: SpatialGrid, amplitude: float = 0.2) -> np.ndarray:
    """Sum of two Gaussian bumps, the default smooth truth coefficient."""
    x = grid.nodes
    return amplitude * (
        np.exp(-((x - 0.35) ** 2) / 0.01) + 0.6 * np.exp(-((x - 0.7) ** 2) / 0.02)
    )


def tent(grid: SpatialGrid, amplitude: float = 0.2) -> np.ndarray:
    """Piecewise-linear tent centered at x = 0.5 with support [0.25, 0.75]."""
    x = grid.nodes
    return amplitude * np.clip(1.0 - np.abs(x - 0.5) / 0.25, 0.0, 1.0)


def two_step(grid: SpatialGrid, amplitude: float = 0.2) -> np.ndarray:
    """Piecewise-constant profile with two plateaus."""
    x = grid.nodes
    out = np.zeros_like(x)
    out[(x >= 0.2) & (x < 0.45)] = amplitude
    out[(x >= 0.55) & (x < 0.8)] = 0.5 * amplitude
    return out


TRUTH_FAMILIES = {
    "smooth_bump": smooth_bump,
    "tent": tent,
    "two_step": two_step,
}


def truth_field(
    name: str, grid: SpatialGrid, amplitude: float = 0.2, basis=None
) -> CoefficientField:
    """Build a named truth coefficient as a CoefficientField (projected onto
    the basis when one is given)."""
    if name not in TRUTH_FAMILIES:
        raise ValueError(
            f"unknown truth family {name!r}; choose from {sorted(TRUTH_FAMILIES)}"
        )
    samples = TRUTH_FAMILIES[name](grid, amplitude)
    return CoefficientField.from_samples(samples, grid, basis)
