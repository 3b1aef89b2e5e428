"""muskatlab: a numerical laboratory for the Muskat equation in graph form.

Evaluates the exact and regularized singular-integral velocity of a
periodic interface, time-steps it, and verifies quantitative properties
(maximum principles, slope monotonicity, L2 growth bounds, smoothing
rates, scaling covariance, stability) through a scripted experiment
battery.
"""

__version__ = "0.1.0"

from .cutoff import RegParams
from .decompose import decompose
from .grid import (
    GridSpec,
    InterfaceField,
    fourier_multiplier,
    gradient,
    laplacian,
    shift,
)
from .singular import QuadratureSpec, rhs_exact, rhs_regularized
from .stepper import SolverConfig, continuation, run

__all__ = [
    "GridSpec",
    "InterfaceField",
    "gradient",
    "shift",
    "fourier_multiplier",
    "laplacian",
    "RegParams",
    "QuadratureSpec",
    "rhs_exact",
    "rhs_regularized",
    "SolverConfig",
    "run",
    "continuation",
    "decompose",
    "__version__",
]
