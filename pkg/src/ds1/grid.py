"""Periodic computational torus, collocation grid, and 2D Fourier transforms.

Domain is the rectangle l_xi*[-pi, pi) x l_eta*[-pi, pi) with uniform
collocation points and power-of-two sizes. The discrete transform is
normalized as a quadrature approximation of the continuous transform

    F(k) = integral f(x) exp(-i k x) dx,
    f(x) = (1 / 2 pi) integral F(k) exp(i k x) dk,

i.e. ``forward`` multiplies the raw FFT by the grid spacing (and the phase
accounting for the domain starting at -l*pi). Consequences used throughout
the package:

* ``forward(f)`` at k = 0 equals the grid quadrature of f exactly;
* Parseval: quadrature(|f|^2) = sum |F|^2 / ((2 pi)^2 l_xi l_eta).

Wavenumbers are the integer lattice scaled by 1/l, in standard FFT order
(0, 1, ..., N/2-1, -N/2, ..., -1)/l.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fourier


class Representation(enum.Enum):
    PHYSICAL = "physical"
    FOURIER = "fourier"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpectralGrid:
    """Torus geometry, collocation points, wavenumber lattices.

    Attributes
    ----------
    n_xi, n_eta : int
        Collocation points per direction (powers of two, >= 8).
    l_xi, l_eta : float
        Half-period scales; the domain is l*[-pi, pi) per direction.
    """

    n_xi: int
    n_eta: int
    l_xi: float
    l_eta: float

    def __post_init__(self) -> None:
        for name, n in (("n_xi", self.n_xi), ("n_eta", self.n_eta)):
            if not _is_pow2(n) or n < 8:
                raise ValueError(f"{name} must be a power of two >= 8, got {n}")
        if self.l_xi <= 0 or self.l_eta <= 0:
            raise ValueError("l_xi and l_eta must be positive")

    @cached_property
    def xi(self) -> np.ndarray:
        j = np.arange(self.n_xi)
        return self.l_xi * (-np.pi + 2.0 * np.pi * j / self.n_xi)

    @cached_property
    def eta(self) -> np.ndarray:
        j = np.arange(self.n_eta)
        return self.l_eta * (-np.pi + 2.0 * np.pi * j / self.n_eta)

    @cached_property
    def k_xi(self) -> np.ndarray:
        # integer modes -N/2 .. N/2-1 in FFT order, scaled by 1/l
        return np.fft.fftfreq(self.n_xi, d=1.0 / self.n_xi) / self.l_xi

    @cached_property
    def k_eta(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_eta, d=1.0 / self.n_eta) / self.l_eta

    @property
    def h_xi(self) -> float:
        return 2.0 * np.pi * self.l_xi / self.n_xi

    @property
    def h_eta(self) -> float:
        return 2.0 * np.pi * self.l_eta / self.n_eta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_xi, self.n_eta)

    @cached_property
    def phase(self) -> np.ndarray:
        # (-1)^(m+n) checkerboard relating an FFT of samples starting at
        # -l*pi to coefficients of exp(i k x) with x = 0 at the domain center
        px = 1.0 - 2.0 * (np.arange(self.n_xi) % 2)
        pe = 1.0 - 2.0 * (np.arange(self.n_eta) % 2)
        return np.outer(px, pe)

    @cached_property
    def phase_fwd(self) -> np.ndarray:
        """Raw FFT -> package convention: quadrature scale and center phase."""
        return (self.h_xi * self.h_eta) * self.phase

    @cached_property
    def phase_inv(self) -> np.ndarray:
        return self.phase / (self.h_xi * self.h_eta)

    @cached_property
    def k2(self) -> np.ndarray:
        """k_xi^2 + k_eta^2 on the 2D lattice."""
        return self.k_xi[:, None] ** 2 + self.k_eta[None, :] ** 2

    @cached_property
    def tail_mask(self) -> np.ndarray:
        """The highest-|k| third of modes (|k| = Euclidean wavenumber magnitude)."""
        kmag = np.sqrt(self.k2)
        return kmag >= np.quantile(kmag, 2.0 / 3.0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask (optional; no dealiasing is applied by default)."""
        mx = np.abs(self.k_xi) <= (2.0 / 3.0) * np.max(np.abs(self.k_xi))
        me = np.abs(self.k_eta) <= (2.0 / 3.0) * np.max(np.abs(self.k_eta))
        return mx[:, None] & me[None, :]

    def quad_weight(self) -> float:
        return self.h_xi * self.h_eta


def make_grid(n_xi: int, n_eta: int, l_xi: float, l_eta: float) -> SpectralGrid:
    """Build a grid; sizes must be powers of two >= 8, scales positive."""
    return SpectralGrid(n_xi=n_xi, n_eta=n_eta, l_xi=float(l_xi), l_eta=float(l_eta))


@dataclass
class ComplexField:
    """2D complex samples of a field, in physical or Fourier representation."""

    grid: SpectralGrid
    representation: Representation
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.representation, self.values.copy())


@dataclass
class RealField:
    """2D real samples in physical representation."""

    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "RealField":
        return RealField(self.grid, self.values.copy())

    def as_complex(self) -> ComplexField:
        return ComplexField(self.grid, Representation.PHYSICAL, self.values.astype(np.complex128))


# -- raw-array transforms (hot path) ----------------------------------------

def fft2_scaled(grid: SpectralGrid, values: np.ndarray) -> np.ndarray:
    """Physical samples -> spectral coefficients under the package convention."""
    return grid.phase_fwd * fourier.fft2(values)


def ifft2_scaled(grid: SpectralGrid, coeffs: np.ndarray) -> np.ndarray:
    """Spectral coefficients -> physical samples (exact inverse of fft2_scaled)."""
    return fourier.ifft2(coeffs * grid.phase_inv)


def fft_axis_scaled(grid: SpectralGrid, values: np.ndarray, axis: int) -> np.ndarray:
    """1D transform along one axis of a 2D array (axis 0 = xi, 1 = eta)."""
    h = grid.h_xi if axis == 0 else grid.h_eta
    n = grid.shape[axis]
    p = 1.0 - 2.0 * (np.arange(n) % 2)
    shape = (n, 1) if axis == 0 else (1, n)
    return h * p.reshape(shape) * fourier.fft(values, axis=axis)


def ifft_axis_scaled(grid: SpectralGrid, coeffs: np.ndarray, axis: int) -> np.ndarray:
    h = grid.h_xi if axis == 0 else grid.h_eta
    n = grid.shape[axis]
    p = 1.0 - 2.0 * (np.arange(n) % 2)
    shape = (n, 1) if axis == 0 else (1, n)
    return fourier.ifft(coeffs * p.reshape(shape), axis=axis) / h


def forward(f: ComplexField) -> ComplexField:
    """2D forward transform; requires a physical-representation field."""
    assert f.representation is Representation.PHYSICAL, "forward() expects physical data"
    return ComplexField(f.grid, Representation.FOURIER, fft2_scaled(f.grid, f.values))


def inverse(F: ComplexField) -> ComplexField:
    """2D inverse transform; requires a Fourier-representation field."""
    assert F.representation is Representation.FOURIER, "inverse() expects Fourier data"
    return ComplexField(F.grid, Representation.PHYSICAL, ifft2_scaled(F.grid, F.values))


def to_real(f: ComplexField, tol: float = 1e-12) -> RealField:
    """Materialize a physical complex field as real, asserting Im is residue."""
    assert f.representation is Representation.PHYSICAL
    max_re = float(np.max(np.abs(f.values.real)))
    max_im = float(np.max(np.abs(f.values.imag)))
    if max_re > 0 and max_im > tol * max_re:
        raise ValueError(f"imaginary content too large: max|Im|={max_im:.3e} vs max|Re|={max_re:.3e}")
    return RealField(f.grid, f.values.real.copy())


# -- quadrature, norms, resolution -------------------------------------------

def quadrature(grid: SpectralGrid, values: np.ndarray) -> float | complex:
    """Grid quadrature of physical samples (trapezoid = rectangle on the torus)."""
    s = values.sum() * grid.quad_weight()
    return complex(s) if np.iscomplexobj(values) else float(s)


def resolution_defect(grid: SpectralGrid, coeffs: np.ndarray) -> float:
    """max |tail coefficient| / max |coefficient| (0 for the zero field)."""
    peak = float(np.max(np.abs(coeffs)))
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs[grid.tail_mask]))) / peak


RESOLVED_TOL = 1e-13


def is_resolved(field: ComplexField | RealField, tol: float = RESOLVED_TOL) -> bool:
    """Decay check: highest-|k| third of coefficients down by a factor tol."""
    if isinstance(field, RealField):
        coeffs = fft2_scaled(field.grid, field.values)
    elif field.representation is Representation.FOURIER:
        coeffs = field.values
    else:
        coeffs = fft2_scaled(field.grid, field.values)
    return resolution_defect(field.grid, coeffs) <= tol


# -- interpolation and shifts -------------------------------------------------

def trig_interpolate(
    grid: SpectralGrid,
    coeffs: np.ndarray,
    xi_pts: np.ndarray,
    eta_pts: np.ndarray,
) -> np.ndarray:
    """Evaluate the trigonometric interpolant on the tensor grid xi_pts x eta_pts.

    Exact (to round-off) for resolved fields at arbitrary points; points
    outside the torus wrap around periodically.
    """
    exi = np.exp(1j * np.outer(np.asarray(xi_pts, dtype=np.float64), grid.k_xi))
    eeta = np.exp(1j * np.outer(grid.k_eta, np.asarray(eta_pts, dtype=np.float64)))
    norm = 1.0 / ((2.0 * np.pi) ** 2 * grid.l_xi * grid.l_eta)
    return norm * (exi @ coeffs @ eeta)


def spectral_shift(grid: SpectralGrid, coeffs: np.ndarray, d_xi: float, d_eta: float) -> np.ndarray:
    """Coefficients of f(xi + d_xi, eta + d_eta) from those of f."""
    px = np.exp(1j * grid.k_xi * d_xi)
    pe = np.exp(1j * grid.k_eta * d_eta)
    return coeffs * px[:, None] * pe[None, :]


_STENCIL_OFFSETS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
_QUAD_DESIGN = np.array([[1.0, x, y, x * x, x * y, y * y] for x, y in _STENCIL_OFFSETS])
_QUAD_SOLVE = np.linalg.pinv(_QUAD_DESIGN)


def refine_peak(grid: SpectralGrid, values: np.ndarray) -> tuple[float, float]:
    """Sub-grid peak location: quadratic fit over the 3x3 stencil at the argmax.

    The full six-coefficient quadratic (with the cross term) matters: peaks
    can sit between grid points tied across the exchange diagonal, where
    axis-by-axis parabolas misplace them badly.
    """
    i, j = np.unravel_index(np.argmax(values), values.shape)
    samples = np.array(
        [values[(i + dx) % grid.n_xi, (j + dy) % grid.n_eta] for dx, dy in _STENCIL_OFFSETS]
    )
    _, c1, c2, c3, c4, c5 = _QUAD_SOLVE @ samples
    hess = np.array([[2.0 * c3, c4], [c4, 2.0 * c5]])
    try:
        dx, dy = np.linalg.solve(hess, [-c1, -c2])
    except np.linalg.LinAlgError:
        dx = dy = 0.0
    dx = float(np.clip(dx, -1.0, 1.0))
    dy = float(np.clip(dy, -1.0, 1.0))
    return grid.xi[i] + dx * grid.h_xi, grid.eta[j] + dy * grid.h_eta
