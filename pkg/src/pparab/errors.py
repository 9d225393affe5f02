"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures (quadrature, CFL, budget, support overflow) with 3,
violated mathematical properties with 4.
"""


class PParabError(Exception):
    """Base class for all package errors."""


class ConfigError(PParabError):
    """Invalid configuration or parameter combination."""


class QuadratureError(PParabError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class CriticalPointError(PParabError):
    """Finite-difference residual requested too close to a critical point."""


class SupportError(PParabError):
    """Solution support does not fit the grid (or touched the boundary collar)."""


class CFLError(PParabError):
    """Explicit step requested with a time step above the stability bound."""


class StepBudgetError(PParabError):
    """Time stepping exceeded the configured step budget."""


class ResolutionError(PParabError):
    """Discretization too coarse for the requested operation."""


class PropertyError(PParabError):
    """A mathematical property that should hold numerically was violated."""
