"""Exception and warning types raised across the package."""


class BbtrackError(Exception):
    """Base class for all package errors."""


class GridMismatch(BbtrackError, ValueError):
    """Two fields or trajectories live on different grids."""


class InvalidExponent(BbtrackError, ValueError):
    """A norm exponent outside the supported range."""


class PoissonSolveFailure(BbtrackError):
    """The pressure Poisson solve missed its tolerance within the cap."""


class IoError(BbtrackError, OSError):
    """A field file could not be read or written."""


class FormatError(BbtrackError, ValueError):
    """A field file has a bad header or an inconsistent payload."""


class NonlinearDivergence(BbtrackError):
    """The Picard iteration of a time step did not converge."""

    def __init__(self, msg, step=None, residual=None):
        super().__init__(msg)
        self.step = step
        self.residual = residual


class CflWarning(UserWarning):
    """Advective CFL number above one (recorded, not fatal)."""


class LinearSolveFailure(BbtrackError):
    """A linearized or adjoint time step did not converge."""


class InfeasibleControl(BbtrackError, ValueError):
    """Control values outside their box bounds."""


class LineSearchFailure(BbtrackError):
    """No acceptable step length was found."""


class DegenerateShape(BbtrackError, ValueError):
    """A perturbation shape with (numerically) zero norm."""


class InsufficientFeasibleSamples(BbtrackError):
    """Too few feasible sample controls at a requested distance."""


class Infeasible(BbtrackError, ValueError):
    """A finite-dimensional box problem with an empty box."""


class UnsupportedObjective(BbtrackError, ValueError):
    """An objective family the active-set enumerator cannot handle."""


class EkelandSearchFailure(BbtrackError):
    """The constructive Ekeland search did not certify a point."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ConfigError(BbtrackError, ValueError):
    """Malformed or inconsistent run configuration."""
