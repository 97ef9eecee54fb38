import numpy as np
import pytest
from scipy.integrate import dblquad
from scipy.optimize import minimize_scalar

from ds1.grid import is_resolved, make_grid, quadrature
from ds1.reference import (
    InitialDataKind,
    InitialDataSpec,
    build_initial_data,
    dromion2_squared,
    dromion_max,
    dromion_radiating,
    omega_rescale,
    radiating_shift_f,
)
from ds1.snapshot import write_snapshot


class TestDromion:
    def test_value_at_origin(self, tier_grid):
        q = dromion_radiating(tier_grid)
        i = tier_grid.n_xi // 2
        assert q.values[i, i] == pytest.approx(0.2, abs=1e-15)

    def test_exchange_symmetric(self, tier_grid):
        q = dromion_radiating(tier_grid).values
        assert np.max(np.abs(q - q.T)) == 0.0

    def test_maximum_on_negative_diagonal(self, tier_grid):
        # independent oracle: 1D maximization of the closed form along xi = eta
        res = minimize_scalar(
            lambda s: -1.0 / (4.0 * np.cosh(s / 2.0) ** 2 + np.exp(s)), bounds=(-2, 1),
            method="bounded", options={"xatol": 1e-12},
        )
        s_ref, v_ref = res.x, -res.fun
        s_closed, v_closed = dromion_max()
        assert s_closed == pytest.approx(s_ref, abs=1e-9)
        assert v_closed == pytest.approx(v_ref, abs=1e-13)
        q = dromion_radiating(tier_grid)
        i, j = np.unravel_index(np.argmax(q.values), q.values.shape)
        assert tier_grid.xi[i] < 0 and tier_grid.eta[j] < 0
        assert abs(tier_grid.xi[i] - s_closed) <= tier_grid.h_xi
        assert np.max(q.values) <= v_closed + 1e-12

    def test_warns_on_small_domain(self):
        g = make_grid(64, 64, 2.0, 2.0)
        with pytest.warns(UserWarning, match="boundary"):
            dromion_radiating(g)


class TestDromion2:
    def test_value_at_origin(self, tier_grid):
        f = dromion2_squared(tier_grid)
        i = tier_grid.n_xi // 2
        assert f.values[i, i] == pytest.approx(4.0 / 25.0, abs=1e-15)

    def test_axis_decay_rate(self, tier_grid):
        # ~ exp(-2(|xi|+|eta|)) along the axes
        g = tier_grid
        f = dromion2_squared(g).values
        i0 = g.n_xi // 2
        xi_a, xi_b = 4.0, 6.0
        ia = i0 + int(round(xi_a / g.h_xi))
        ib = i0 + int(round(xi_b / g.h_xi))
        measured = np.log(f[ib, i0] / f[ia, i0]) / (g.xi[ib] - g.xi[ia])
        assert measured == pytest.approx(-2.0, abs=0.1)

    def test_mass_stable_under_grid_doubling(self):
        g1 = make_grid(256, 256, 10.0, 10.0)
        g2 = make_grid(512, 512, 10.0, 10.0)
        m1 = quadrature(g1, dromion2_squared(g1).values)
        m2 = quadrature(g2, dromion2_squared(g2).values)
        assert m1 > 0
        assert abs(m1 - m2) <= 1e-12 * m1

    def test_mass_against_adaptive_quadrature(self):
        g = make_grid(512, 512, 10.0, 10.0)
        m = quadrature(g, dromion2_squared(g).values)
        ref, err = dblquad(
            lambda e, x: 4.0 / (4.0 * np.cosh(x) * np.cosh(e) + np.exp(x + e)) ** 2,
            -25, 25, -25, 25, epsabs=1e-11, epsrel=1e-11,
        )
        assert abs(m - ref) < 1e-9


class TestRadiatingShift:
    def test_limits_and_value(self):
        assert radiating_shift_f(np.array([-40.0]))[0] == pytest.approx(5.0 / 4.0, abs=1e-14)
        assert radiating_shift_f(np.array([40.0]))[0] == pytest.approx(0.0, abs=1e-15)
        assert radiating_shift_f(np.array([0.0]))[0] == pytest.approx(7.0 / 12.0, abs=1e-15)


class TestOmegaRescale:
    def test_identity(self, tier_q):
        out = omega_rescale(tier_q.Q, 1.0)
        assert np.array_equal(out.values, tier_q.Q.values)

    def test_omega_four_doubles_max(self, tier_q):
        out = omega_rescale(tier_q.Q, 4.0)
        assert np.max(out.values) == pytest.approx(2.0 * np.max(tier_q.Q.values), rel=1e-10)

    def test_l2_mass_invariant(self, tier_q):
        g = tier_q.Q.grid
        out = omega_rescale(tier_q.Q, 4.0)
        m0 = quadrature(g, tier_q.Q.values**2)
        m4 = quadrature(g, out.values**2)
        assert abs(m4 - m0) <= 1e-10 * m0

    def test_rejects_unfit_rescale(self, tier_q):
        with pytest.raises(ValueError):
            omega_rescale(tier_q.Q, 0.05)
        with pytest.raises(ValueError):
            omega_rescale(tier_q.Q, -1.0)


class TestInitialData:
    def test_mu_times_q(self, tier_grid, tier_q):
        spec = InitialDataSpec(InitialDataKind.MU_TIMES_Q, 1.1)
        f = build_initial_data(spec, tier_grid, tier_q.Q)
        assert np.allclose(f.values.real, 1.1 * tier_q.Q.values)
        mass = quadrature(tier_grid, np.abs(f.values) ** 2)
        assert mass == pytest.approx(1.21 * tier_q.mass, rel=1e-12)

    @pytest.mark.parametrize("kappa,ratio", [(3.0, 0.65), (4.5, 1.45)])
    def test_gaussian_mass_ratios(self, tier_grid, tier_q, kappa, ratio):
        spec = InitialDataSpec(InitialDataKind.GAUSSIAN, kappa)
        f = build_initial_data(spec, tier_grid, None)
        mass = quadrature(tier_grid, np.abs(f.values) ** 2)
        assert abs(mass / tier_q.mass - ratio) <= 0.02

    def test_q_minus_gaussian_mass_ratio(self, tier_grid, tier_q):
        spec = InitialDataSpec(InitialDataKind.Q_MINUS_GAUSSIAN, 0.1)
        f = build_initial_data(spec, tier_grid, tier_q.Q)
        mass = quadrature(tier_grid, np.abs(f.values) ** 2)
        assert abs(mass / tier_q.mass - 0.96) <= 0.02

    def test_scaled_dromion(self, tier_grid):
        spec = InitialDataSpec(InitialDataKind.SCALED_DROMION_RADIATING, 6.0)
        f = build_initial_data(spec, tier_grid, None)
        assert np.max(f.values.real) == pytest.approx(
            6.0 / (2.0 + 2.0 * np.sqrt(2.0)), rel=1e-3
        )

    def test_missing_q_raises(self, tier_grid):
        spec = InitialDataSpec(InitialDataKind.MU_TIMES_Q, 0.9)
        with pytest.raises(ValueError, match="stationary solution"):
            build_initial_data(spec, tier_grid, None)

    def test_from_file(self, tmp_path, tier_grid, tier_q):
        p = tmp_path / "q.ds1f"
        write_snapshot(p, tier_q.Q.as_complex(), 0.0)
        spec = InitialDataSpec(InitialDataKind.FROM_FILE, file_path=str(p))
        f = build_initial_data(spec, tier_grid, None)
        assert np.array_equal(f.values.real, tier_q.Q.values)

    def test_from_file_grid_mismatch(self, tmp_path, tier_q):
        p = tmp_path / "q.ds1f"
        write_snapshot(p, tier_q.Q.as_complex(), 0.0)
        other = make_grid(256, 256, 10.0, 10.0)
        spec = InitialDataSpec(InitialDataKind.FROM_FILE, file_path=str(p))
        with pytest.raises(ValueError, match="grid"):
            build_initial_data(spec, other, None)

    def test_amplitude_validation(self):
        with pytest.raises(ValueError):
            InitialDataSpec(InitialDataKind.GAUSSIAN, -1.0)
        with pytest.raises(ValueError):
            InitialDataSpec(InitialDataKind.FROM_FILE)


def test_reference_fields_resolved_at_paper_resolutions(tier_q):
    big = make_grid(1024, 1024, 20.0, 20.0)
    assert is_resolved(dromion_radiating(big))
    g10 = make_grid(512, 512, 10.0, 10.0)
    assert is_resolved(dromion2_squared(g10))
    gg = make_grid(1024, 1024, 10.0, 10.0)
    spec = InitialDataSpec(InitialDataKind.GAUSSIAN, 4.5)
    from ds1.grid import RealField

    assert is_resolved(RealField(gg, build_initial_data(spec, gg, None).values.real))
