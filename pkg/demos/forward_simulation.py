"""Forward simulation walkthrough.

Solves the damped nonlinear wave model with a space-dependent nonlinearity
coefficient, verifies second-order convergence against a manufactured
solution, and shows how the nonlinearity distorts the boundary pressure
trace relative to the linear model.

Run from the repository root:  python3 demos/forward_simulation.py
"""

import os

import numpy as np

from westinv import (
    BoundaryCondition,
    MaterialParams,
    SpatialGrid,
    TimeGrid,
    manufactured_source,
    observe,
    smooth_bump,
    solve_forward,
)

OUT = os.path.join(os.path.dirname(__file__), "output", "forward")

PARAMS = MaterialParams(c2=1.0, b=0.2)
BC = BoundaryCondition.from_kinds("dirichlet", "neumann")


def excitation():
    f = lambda x: np.sin(np.pi * x / 2)
    f_xx = lambda x: -((np.pi / 2) ** 2) * np.sin(np.pi * x / 2)
    return f, f_xx


def convergence_study():
    print("Manufactured-solution refinement study (exact p = f(x) t^2):")
    f, f_xx = excitation()
    prev = None
    for level in range(4):
        nx, nt = 25 * 2**level + 1, 50 * 2**level
        grid, tgrid = SpatialGrid(nx), TimeGrid(nt)
        source = manufactured_source(
            f, f_xx, lambda t: t**2, lambda t: 2 * t,
            lambda t: 2 * np.ones_like(t), PARAMS, grid, tgrid, BC,
        )
        state = solve_forward(PARAMS, None, source, grid, tgrid, BC)
        exact = f(grid.nodes)[:, None] * (tgrid.times**2)[None, :]
        err = np.max(np.abs(state.values - exact))
        order = f"{np.log2(prev / err):.3f}" if prev else "  -  "
        print(f"  nx={nx:4d} nt={nt:5d}  max error {err:.3e}  order {order}")
        prev = err


def nonlinear_trace_comparison():
    print("\nEffect of the nonlinearity on the boundary trace at x = 1:")
    grid, tgrid = SpatialGrid(101), TimeGrid(400)
    f, f_xx = excitation()
    # smooth ramp excitation keeps the pressure near its peak, which is
    # where the quadratic nonlinearity is most visible
    beta = lambda t: 0.5 * (1 - np.cos(np.pi * t))
    beta_t = lambda t: 0.5 * np.pi * np.sin(np.pi * t)
    beta_tt = lambda t: 0.5 * np.pi**2 * np.cos(np.pi * t)
    source = manufactured_source(f, f_xx, beta, beta_t, beta_tt, PARAMS,
                                 grid, tgrid, BC)
    kappa = smooth_bump(grid, amplitude=0.3)
    linear = observe(solve_forward(PARAMS, None, source, grid, tgrid, BC), 1.0)
    nonlin = observe(solve_forward(PARAMS, kappa, source, grid, tgrid, BC), 1.0)
    gap = np.max(np.abs(nonlin.values - linear.values))
    rel = gap / np.max(np.abs(linear.values))
    print(f"  max |h_nonlinear - h_linear| = {gap:.4e} "
          f"({100 * rel:.2f}% of the peak trace)")
    print("  this gap is the signal the reconstruction methods invert.")

    os.makedirs(OUT, exist_ok=True)
    path = os.path.join(OUT, "traces.csv")
    with open(path, "w") as fh:
        fh.write("t,h_linear,h_nonlinear\n")
        for t, hl, hn in zip(tgrid.times, linear.values, nonlin.values):
            fh.write(f"{t:.17g},{hl:.17g},{hn:.17g}\n")
    print(f"  traces written to {path}")


if __name__ == "__main__":
    convergence_study()
    nonlinear_trace_comparison()
