"""Fokker-Planck solver, exponential partial averages, and the
reduced-system consistency harness."""

import numpy as np
import pytest

from xdiff.coeffs import CoefficientSpec
from xdiff.entropy import EntropyParams
from xdiff.fokker_planck import (
    FPField,
    consistency_compare,
    fp_step,
    partial_average,
    partial_average_arrays,
)
from xdiff.presets import make_fp_initial

CONST = CoefficientSpec.constant()
A4 = EntropyParams(4.0)
LAM = (0.5, -0.5)


def gaussian_fp(n_x=32, n_y=256, L=8.0, lam=LAM, sigma_n=1.0, profile="constant", amp=0.3):
    return make_fp_initial(
        n_x=n_x, n_y=n_y, L=L, lam=lam, sigma_n=sigma_n,
        x_profile=profile, base=1.0, amplitude=amp, y_sigma=1.0,
    )


class TestFPField:
    def test_normalized_probability_mass(self):
        fp = gaussian_fp()
        assert fp.mass() == pytest.approx(1.0, rel=1e-13)
        assert np.all(fp.f >= 0.0)

    def test_equal_weights_rejected(self):
        with pytest.raises(ValueError, match="lambda"):
            FPField(f=np.ones((8, 8)), lam=(0.5, 0.5), sigma_n=1.0, L=4.0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            FPField(f=np.ones((8, 8)), lam=LAM, sigma_n=0.0, L=4.0)
        with pytest.raises(ValueError):
            FPField(f=np.ones((8, 8)), lam=LAM, sigma_n=1.0, L=-1.0)
        with pytest.raises(ValueError):
            FPField(f=np.ones((8, 2)), lam=LAM, sigma_n=1.0, L=4.0)

    def test_source_rates_pairing(self):
        # mu_i = lambda_i^2 sigma_n^2 / 2
        fp = gaussian_fp(sigma_n=2.0)
        assert fp.source_rates() == pytest.approx((0.5**2 * 4.0 / 2, 0.5**2 * 4.0 / 2))

    def test_truncation_adequacy_of_gaussian(self):
        ok, ratio = gaussian_fp().truncation_margin()
        assert ok and ratio <= 1e-10

    def test_truncation_flagged_for_narrow_box(self):
        fp = make_fp_initial(n_x=16, n_y=64, L=2.0, lam=LAM, sigma_n=1.0, x_profile="constant", y_sigma=1.0)
        ok, _ = fp.truncation_margin()
        assert not ok


class TestPartialAverages:
    def test_zero_weight_gives_marginal(self):
        fp = make_fp_initial(n_x=16, n_y=256, L=8.0, lam=(0.0, 1.0), sigma_n=1.0, x_profile="cosine-perturbed")
        u1, _ = partial_average_arrays(fp)
        marginal = fp.f @ fp.y_weights()
        np.testing.assert_allclose(u1, marginal, rtol=1e-14)

    def test_gaussian_moment_generating_function(self):
        # separable f = g(x) N(y; 0, s^2) gives u_i = g e^(lam_i^2 s^2 / 2)
        fp = gaussian_fp(profile="cosine-perturbed")
        u1, u2 = partial_average_arrays(fp)
        gx = fp.f @ fp.y_weights()
        factor = np.exp(LAM[0] ** 2 / 2.0)
        np.testing.assert_allclose(u1, gx * factor, rtol=1e-6)
        np.testing.assert_allclose(u2, gx * factor, rtol=1e-6)

    def test_nonnegative_density_gives_nonnegative_averages(self):
        fp = gaussian_fp()
        u1, u2 = partial_average_arrays(fp)
        assert np.all(u1 >= 0.0) and np.all(u2 >= 0.0)

    def test_state_field_conversion(self):
        fp = gaussian_fp(profile="cosine-perturbed")
        state = partial_average(fp)
        assert state.grid.n == fp.n_x and state.grid.d == 1
        assert state.mu == pytest.approx(fp.source_rates())

    def test_weight_identity(self):
        # discrete d/dy of f against the weight reproduces -lam * u at the
        # quadrature's second-order accuracy (boundary terms negligible)
        residuals = {}
        for n_y in (256, 512):
            fp = gaussian_fp(n_y=n_y)
            y, w = fp.y_nodes(), fp.y_weights()
            u1, _ = partial_average_arrays(fp)
            dfdy = np.gradient(fp.f, fp.dy, axis=1)
            ident = dfdy @ (w * np.exp(LAM[0] * y))
            residuals[n_y] = np.max(np.abs(ident + LAM[0] * u1))
        assert residuals[256] <= 2e-4
        assert residuals[256] / residuals[512] == pytest.approx(4.0, rel=0.2)


class TestFPStep:
    def test_gaussian_variance_growth(self):
        # y-marginal follows the heat kernel: variance s^2 + sigma_n^2 t
        fp = gaussian_fp()
        y, w = fp.y_nodes(), fp.y_weights()
        tau, steps = 1e-3, 100
        f = fp
        for _ in range(steps):
            f = fp_step(f, CONST, tau)
        var = float(np.sum((f.f[0] * w) * y**2) / np.sum(f.f[0] * w))
        assert var == pytest.approx(1.0 + 1.0 * tau * steps, rel=1e-4)

    def test_uniform_x_profile_is_preserved(self):
        fp = gaussian_fp()
        f = fp
        for _ in range(20):
            f = fp_step(f, CONST, 1e-3)
        marginal = f.f @ f.y_weights()
        assert (marginal.max() - marginal.min()) / marginal.mean() <= 1e-12

    def test_mass_conserved(self):
        fp = gaussian_fp(profile="cosine-perturbed")
        f = fp
        for _ in range(50):
            f = fp_step(f, CoefficientSpec.power(0.5), 2e-3)
        assert abs(f.mass() - 1.0) <= 1e-8

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            fp_step(gaussian_fp(), CONST, 0.0)


class TestConsistency:
    def test_constant_family_refinement(self):
        # both routes discretize the same heat flow with growth e^(mu t);
        # the discrepancy is discretization error and shrinks ~4x under
        # joint (dx, dy, tau ~ dx^2) halving
        params = EntropyParams(4.0)

        def factory(n_x, n_y):
            return gaussian_fp(n_x=n_x, n_y=n_y, profile="cosine-perturbed")

        report = consistency_compare(
            CONST, params, factory, horizon=0.05, resolutions=[(32, 64, 5e-3), (64, 128, 1.25e-3)]
        )
        assert report.rows[0].discrepancy_u1 <= 1e-3
        assert all(row.truncation_ok for row in report.rows)
        assert all(row.mass_drift <= 1e-8 for row in report.rows)
        assert 2.5 <= report.ratios_u1[0] <= 6.0
        assert 2.5 <= report.ratios_u2[0] <= 6.0

    def test_invalid_horizon(self):
        with pytest.raises(ValueError):
            consistency_compare(CONST, A4, lambda n_x, n_y: gaussian_fp(), horizon=0.0, resolutions=[(16, 32, 1e-3)])

    def test_factory_type_checked(self):
        with pytest.raises(TypeError):
            consistency_compare(CONST, A4, lambda n_x, n_y: np.ones((4, 4)), horizon=0.1, resolutions=[(16, 32, 1e-3)])
