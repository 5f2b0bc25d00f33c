"""Exception types raised by the solvers and the experiment harness."""


class WestinvError(Exception):
    """Base class for all package-specific errors."""


class DegeneracyError(WestinvError):
    """The factor 1 - 2*kappa*p dropped below the admissible positivity floor."""


class NoConvergenceError(WestinvError):
    """The inner fixed-point iteration of the forward solver did not converge."""


class OffGridError(WestinvError):
    """A requested observation point is not a node of the spatial grid."""


class GridTooCoarseError(WestinvError):
    """The time grid has too few points for the requested stencil."""


class IncompatibleBCError(WestinvError):
    """A manufactured spatial profile violates the active boundary conditions."""


class GridMismatchError(WestinvError):
    """Fields passed to a solver live on inconsistent grids."""


class UnsupportedObservationError(WestinvError):
    """The observation point is not supported by the 1-D adjoint solver."""


class SingularOperatorError(WestinvError):
    """The elliptic operator is singular (pure Neumann conditions)."""


class RankDeficientError(WestinvError):
    """The basis Gram matrix is numerically singular."""


class DivergenceError(WestinvError):
    """An iterative scheme diverged (residual blew up)."""


class LinearSolveError(WestinvError):
    """The regularized normal equations are numerically singular."""


class TooFewSamplesError(WestinvError):
    """A raw trace has too few samples for prefiltering."""


class ConfigError(WestinvError):
    """An experiment configuration violates the schema."""
