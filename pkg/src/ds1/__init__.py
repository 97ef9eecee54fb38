"""Pseudospectral solver for the Davey-Stewartson I system in characteristic
coordinates with trivial boundary conditions: regularized antiderivative
operators, Newton-Krylov stationary states, stiff-split time evolution, and
finite-time blow-up diagnostics."""

__version__ = "0.1.0"

from .grid import (  # noqa: F401
    ComplexField,
    RealField,
    Representation,
    SpectralGrid,
    forward,
    inverse,
    make_grid,
)
from .operators import Axis, antiderivative, apply_B, derivative, erf_eval  # noqa: F401
from .reference import InitialDataKind, InitialDataSpec, build_initial_data  # noqa: F401
from .stationary import NewtonConfig, StationaryResult, newton_solve  # noqa: F401
from .evolution import EvolutionConfig, EvolutionRecord, Termination, evolve  # noqa: F401
from .fitting import Classification, FitReport, NormKind, classify, fit_blowup  # noqa: F401
