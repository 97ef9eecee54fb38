"""Closed-form reference objects: radiating-BC dromion, operator test
functions, Gaussian data, and initial-data construction.

The radiating-boundary-condition dromion enters only as a test function
and as the scaled initial iterate of the stationary solver; it is not a
solution under the trivial boundary conditions solved here.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import (
    ComplexField,
    RealField,
    Representation,
    SpectralGrid,
    fft2_scaled,
    inverse,
    trig_interpolate,
)
from .snapshot import read_snapshot

BOUNDARY_DECAY_TOL = 1e-14


class InitialDataKind(enum.Enum):
    SCALED_DROMION_RADIATING = "scaled_dromion_radiating"
    MU_TIMES_Q = "mu_times_Q"
    Q_MINUS_GAUSSIAN = "Q_minus_gaussian"
    GAUSSIAN = "gaussian"
    FROM_FILE = "from_file"


@dataclass(frozen=True)
class InitialDataSpec:
    kind: InitialDataKind
    amplitude: float = 1.0
    file_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind is not InitialDataKind.FROM_FILE and self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.kind is InitialDataKind.FROM_FILE and not self.file_path:
            raise ValueError("from_file initial data requires file_path")


def _boundary_max(values: np.ndarray) -> float:
    return float(
        max(
            np.max(np.abs(values[0, :])),
            np.max(np.abs(values[-1, :])),
            np.max(np.abs(values[:, 0])),
            np.max(np.abs(values[:, -1])),
        )
    )


def dromion_radiating(grid: SpectralGrid) -> RealField:
    """Exact stationary solution under radiating boundary conditions,

        1 / (4 cosh(xi/2) cosh(eta/2) + exp((xi+eta)/2)).
    """
    xi = grid.xi[:, None]
    eta = grid.eta[None, :]
    values = 1.0 / (4.0 * np.cosh(xi / 2.0) * np.cosh(eta / 2.0) + np.exp((xi + eta) / 2.0))
    if _boundary_max(values) > BOUNDARY_DECAY_TOL:
        warnings.warn(
            f"dromion boundary values {_boundary_max(values):.2e} exceed "
            f"{BOUNDARY_DECAY_TOL:.0e}; enlarge the domain",
            stacklevel=2,
        )
    return RealField(grid, values)


def dromion_max() -> tuple[float, float]:
    """(location s on the diagonal xi = eta, maximum value) of the radiating dromion.

    Maximizing 1/(4 cosh^2(s/2) + exp(s)) = 1/(2 + 2 cosh s + exp(s)) gives
    2 sinh s + e^s = 0, i.e. s = -(ln 2)/2, with value 1/(2 + 2 sqrt(2)).
    """
    return -0.5 * np.log(2.0), 1.0 / (2.0 + 2.0 * np.sqrt(2.0))


def dromion2_squared(grid: SpectralGrid) -> RealField:
    """|Q~_2|^2 = 4 / (4 cosh(xi) cosh(eta) + exp(xi+eta))^2, the B-operator test function."""
    xi = grid.xi[:, None]
    eta = grid.eta[None, :]
    values = 4.0 / (4.0 * np.cosh(xi) * np.cosh(eta) + np.exp(xi + eta)) ** 2
    return RealField(grid, values)


def _halfline_antiderivative_term(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """xi-antiderivative H (vanishing at xi -> +inf) of d/deta |Q~_2|^2,
    in the variables a = exp(2 xi), b = exp(2 eta)."""
    alpha = 2.0 * b + 1.0
    beta = b + 1.0
    p = alpha * a + beta
    return 4.0 * b * (
        (1.0 - 2.0 * b) / alpha**2 * (-1.0 / p + beta / (2.0 * p**2))
        - (1.0 - b) / (2.0 * alpha * p**2)
    )


def _term_dxi_inv_deta(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Closed form of dxi^{-1} (deta |Q~_2|^2) with trivial boundary conditions.

    |Q~_2|^2 = 4ab/(2ab + a + b + 1)^2 with a = e^{2 xi}, b = e^{2 eta} is
    rational in a with denominator linear in a, so the xi-antiderivative is
    elementary; the principal-value normalization subtracts half the total
    jump, giving H(xi) - H(-inf)/2 for the primitive H chosen to vanish at
    +inf.
    """
    a = np.exp(2.0 * xi)
    b = np.exp(2.0 * eta)
    h = _halfline_antiderivative_term(a, b)
    h_minus_inf = _halfline_antiderivative_term(np.zeros_like(a), b)
    return h - 0.5 * h_minus_inf


def dromion2_b_exact(grid: SpectralGrid) -> RealField:
    """Exact action of B = dxi^{-1} deta + deta^{-1} dxi on |Q~_2|^2.

    By the xi <-> eta symmetry of the test function the second term is the
    first with swapped arguments.
    """
    xi = grid.xi[:, None]
    eta = grid.eta[None, :]
    values = _term_dxi_inv_deta(xi, eta) + _term_dxi_inv_deta(eta, xi)
    return RealField(grid, values)


def radiating_shift_f(x: np.ndarray) -> np.ndarray:
    """Shift function of the radiating boundary conditions,

        f(x) = 4/(4(1+e^x)) + 1/(4(1+2e^x))

    (the first term reduces to 1/(1+e^x); kept in the unreduced form).
    Shipped for documenting the radiating-vs-trivial distinction; the solver
    itself only uses trivial boundary conditions.
    """
    ex = np.exp(np.asarray(x, dtype=np.float64))
    return 4.0 / (4.0 * (1.0 + ex)) + 1.0 / (4.0 * (1.0 + 2.0 * ex))


def omega_rescale(Q: RealField, omega: float) -> RealField:
    """Scaling-family member Q_omega = sqrt(omega) Q(sqrt(omega) xi, sqrt(omega) eta).

    Samples are produced by exact trigonometric interpolation of Q at the
    stretched coordinates; stretched points falling outside the original
    domain take the value 0 (Q decays below round-off there), which avoids
    wrap-around of the periodic interpolant.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    grid = Q.grid
    if omega == 1.0:
        return Q.copy()
    root = float(np.sqrt(omega))
    coeffs = fft2_scaled(grid, Q.values.astype(np.complex128))
    xi_s = root * grid.xi
    eta_s = root * grid.eta
    vals = root * trig_interpolate(grid, coeffs, xi_s, eta_s).real
    in_xi = (xi_s >= grid.xi[0]) & (xi_s < -grid.xi[0])
    in_eta = (eta_s >= grid.eta[0]) & (eta_s < -grid.eta[0])
    vals *= in_xi[:, None]
    vals *= in_eta[None, :]
    out = RealField(grid, vals)
    bmax = _boundary_max(vals)
    if bmax > 1e-10 * float(np.max(np.abs(vals))):
        raise ValueError(
            f"rescaled field violates boundary decay (boundary max {bmax:.2e}); "
            "omega too small for this domain"
        )
    return out


def gaussian_hump(grid: SpectralGrid, amplitude: float) -> np.ndarray:
    xi = grid.xi[:, None]
    eta = grid.eta[None, :]
    return amplitude * np.exp(-(xi**2) - eta**2)


def build_initial_data(
    spec: InitialDataSpec, grid: SpectralGrid, Q: RealField | None = None
) -> ComplexField:
    """Materialize initial data on the grid per the descriptor.

    Q (the computed stationary solution) must be supplied for the kinds
    that reference it.
    """
    kind = spec.kind
    if kind in (InitialDataKind.MU_TIMES_Q, InitialDataKind.Q_MINUS_GAUSSIAN):
        if Q is None:
            raise ValueError(f"initial data kind {kind.value} requires the stationary solution Q")
        if Q.grid != grid:
            raise ValueError("Q grid does not match the run grid")

    if kind is InitialDataKind.SCALED_DROMION_RADIATING:
        values = spec.amplitude * dromion_radiating(grid).values
    elif kind is InitialDataKind.MU_TIMES_Q:
        values = spec.amplitude * Q.values
    elif kind is InitialDataKind.Q_MINUS_GAUSSIAN:
        values = Q.values - gaussian_hump(grid, spec.amplitude)
    elif kind is InitialDataKind.GAUSSIAN:
        values = gaussian_hump(grid, spec.amplitude)
    elif kind is InitialDataKind.FROM_FILE:
        field, _time = read_snapshot(Path(spec.file_path))
        if field.grid != grid:
            raise ValueError(
                f"snapshot grid {field.grid} does not match run grid {grid}"
            )
        if field.representation is Representation.FOURIER:
            field = inverse(field)
        return field
    else:  # pragma: no cover
        raise ValueError(f"unknown initial data kind {kind}")
    return ComplexField(grid, Representation.PHYSICAL, values.astype(np.complex128))
