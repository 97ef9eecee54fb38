import numpy as np
import pytest

from ds1.grid import (
    ComplexField,
    RealField,
    Representation,
    fft2_scaled,
    forward,
    ifft2_scaled,
    inverse,
    is_resolved,
    make_grid,
    quadrature,
    refine_peak,
    resolution_defect,
    spectral_shift,
    to_real,
    trig_interpolate,
)
from ds1.snapshot import SnapshotError, read_snapshot, write_snapshot

EPS = np.finfo(float).eps


def test_make_grid_paper_parameters():
    g = make_grid(2**10, 2**10, 20.0, 20.0)
    assert g.xi[0] == -20.0 * np.pi
    assert np.allclose(np.diff(g.xi), 40.0 * np.pi / 1024)
    # half-open domain: right endpoint excluded
    assert g.xi[-1] < 20.0 * np.pi


def test_make_grid_selftest_parameters():
    g = make_grid(2**9, 2**9, 10.0, 10.0)
    assert g.shape == (512, 512)
    assert np.isclose(np.max(g.k_xi), (256 - 1) / 10.0)


def test_smallest_grid_wavenumbers():
    g = make_grid(8, 8, 1.0, 1.0)
    assert sorted(g.k_xi) == [-4, -3, -2, -1, 0, 1, 2, 3]
    assert np.count_nonzero(g.k_xi == 0.0) == 1


@pytest.mark.parametrize("n", [7, 12, 100, 4])
def test_non_power_of_two_rejected(n):
    with pytest.raises(ValueError):
        make_grid(n, 8, 1.0, 1.0)


def test_nonpositive_scale_rejected():
    with pytest.raises(ValueError):
        make_grid(8, 8, 0.0, 1.0)


def test_collocation_points_formula():
    g = make_grid(16, 8, 3.0, 5.0)
    j = np.arange(16)
    assert np.array_equal(g.xi, 3.0 * (-np.pi + 2 * np.pi * j / 16))


def test_constant_maps_to_zero_mode():
    g = make_grid(32, 32, 2.0, 2.0)
    f = ComplexField(g, Representation.PHYSICAL, np.full(g.shape, 2.5 + 0j))
    F = forward(f)
    assert F.representation is Representation.FOURIER
    nonzero = np.abs(F.values) > 1e-12
    assert nonzero.sum() == 1 and nonzero[0, 0]
    # zero mode equals the quadrature of f
    assert np.isclose(F.values[0, 0], quadrature(g, f.values))


def test_pure_harmonic_single_mode():
    g = make_grid(32, 32, 2.0, 2.0)
    m = 3
    vals = np.exp(1j * g.xi * m / g.l_xi)[:, None] * np.ones((1, 32))
    F = forward(ComplexField(g, Representation.PHYSICAL, vals))
    idx = np.unravel_index(np.argmax(np.abs(F.values)), F.values.shape)
    assert g.k_xi[idx[0]] == m / g.l_xi and g.k_eta[idx[1]] == 0.0
    mask = np.ones(g.shape, bool)
    mask[idx] = False
    assert np.max(np.abs(F.values[mask])) <= 1e-10 * np.abs(F.values[idx])


def test_roundtrip_random_field():
    g = make_grid(128, 64, 3.0, 7.0)
    rng = np.random.default_rng(11)
    vals = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f = ComplexField(g, Representation.PHYSICAL, vals)
    back = inverse(forward(f))
    assert np.max(np.abs(back.values - vals)) <= 10 * EPS * np.max(np.abs(vals))


def test_parseval():
    g = make_grid(64, 128, 2.0, 9.0)
    rng = np.random.default_rng(3)
    vals = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    F = fft2_scaled(g, vals)
    lhs = quadrature(g, np.abs(vals) ** 2)
    rhs = np.sum(np.abs(F) ** 2) / ((2 * np.pi) ** 2 * g.l_xi * g.l_eta)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_representation_mismatch_asserts():
    g = make_grid(8, 8, 1.0, 1.0)
    f = ComplexField(g, Representation.FOURIER, np.zeros(g.shape, complex))
    with pytest.raises(AssertionError):
        forward(f)


def test_to_real_accepts_residue_and_rejects_complex():
    g = make_grid(8, 8, 1.0, 1.0)
    ok = ComplexField(g, Representation.PHYSICAL, np.ones(g.shape) + 1e-14j)
    assert isinstance(to_real(ok), RealField)
    bad = ComplexField(g, Representation.PHYSICAL, np.ones(g.shape) + 1e-3j)
    with pytest.raises(ValueError):
        to_real(bad)


def test_resolved_check():
    g = make_grid(256, 256, 10.0, 10.0)
    smooth = np.exp(-(g.xi[:, None] ** 2) - g.eta[None, :] ** 2)
    assert is_resolved(RealField(g, smooth))
    rng = np.random.default_rng(0)
    rough = rng.standard_normal(g.shape)
    assert not is_resolved(RealField(g, rough))
    assert resolution_defect(g, np.zeros(g.shape, complex)) == 0.0


def test_dealias_mask_exists_but_unused_by_default():
    g = make_grid(32, 32, 1.0, 1.0)
    assert g.dealias_mask.shape == g.shape
    # no implicit filtering: a full-band field round-trips unchanged
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(g.shape) + 0j
    assert np.max(np.abs(ifft2_scaled(g, fft2_scaled(g, vals)) - vals)) < 1e-13


def test_trig_interpolation_exact_at_and_off_grid():
    g = make_grid(128, 128, 4.0, 4.0)
    xi = g.xi[:, None]
    eta = g.eta[None, :]
    vals = (np.exp(-(xi**2) - eta**2) * (1 + 0.3 * np.sin(xi / 2))).astype(complex)
    coeffs = fft2_scaled(g, vals)
    at_grid = trig_interpolate(g, coeffs, g.xi, g.eta)
    assert np.max(np.abs(at_grid - vals)) < 1e-12
    # off-grid: compare against the analytic band-limited function
    pts = np.array([-1.234, 0.0, 2.7182])
    got = trig_interpolate(g, coeffs, pts, pts)
    ref = np.exp(-(pts[:, None] ** 2) - pts[None, :] ** 2) * (1 + 0.3 * np.sin(pts[:, None] / 2))
    assert np.max(np.abs(got - ref)) < 1e-11


def test_spectral_shift_matches_translation():
    g = make_grid(128, 128, 4.0, 4.0)
    vals = np.exp(-((g.xi[:, None] - 0.5) ** 2) - (g.eta[None, :] + 0.25) ** 2).astype(complex)
    shifted = ifft2_scaled(g, spectral_shift(g, fft2_scaled(g, vals), 0.5, -0.25))
    centered = np.exp(-(g.xi[:, None] ** 2) - g.eta[None, :] ** 2)
    assert np.max(np.abs(shifted.real - centered)) < 1e-12


def test_refine_peak_tied_diagonal():
    g = make_grid(64, 64, 2.0, 2.0)
    # peak exactly between grid points on the diagonal
    x0 = g.xi[30] + 0.5 * g.h_xi
    vals = np.exp(-((g.xi[:, None] - x0) ** 2) - (g.eta[None, :] - x0) ** 2)
    xi0, eta0 = refine_peak(g, vals)
    assert abs(xi0 - x0) < 0.05 * g.h_xi
    assert abs(eta0 - x0) < 0.05 * g.h_eta


def test_snapshot_roundtrip(tmp_path):
    g = make_grid(32, 16, 2.0, 3.0)
    rng = np.random.default_rng(5)
    vals = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f = ComplexField(g, Representation.PHYSICAL, vals)
    p = tmp_path / "f.ds1f"
    write_snapshot(p, f, time=1.25)
    back, t = read_snapshot(p)
    assert t == 1.25
    assert back.grid == g
    assert back.representation is Representation.PHYSICAL
    assert np.array_equal(back.values, vals)
    # byte determinism
    write_snapshot(tmp_path / "g.ds1f", f, time=1.25)
    assert (tmp_path / "g.ds1f").read_bytes() == p.read_bytes()


def test_snapshot_errors(tmp_path):
    p = tmp_path / "bad.ds1f"
    p.write_bytes(b"NOPE" + b"\0" * 60)
    with pytest.raises(SnapshotError):
        read_snapshot(p)
    p2 = tmp_path / "trunc.ds1f"
    g = make_grid(16, 16, 1.0, 1.0)
    write_snapshot(p2, ComplexField(g, Representation.PHYSICAL, np.ones(g.shape, complex)), 0.0)
    data = p2.read_bytes()
    p2.write_bytes(data[: len(data) // 2])
    with pytest.raises(SnapshotError):
        read_snapshot(p2)
