"""Coefficient families: values, derivatives, and structural certificates."""

import numpy as np
import pytest

from xdiff.coeffs import DEFAULT_R_GRID, CoefficientSpec, verify_assumptions

ALL_CERTIFIED = [
    CoefficientSpec.constant(),
    CoefficientSpec.power(0.5),
    CoefficientSpec.power(1.0),
    CoefficientSpec.power(0.25),
    CoefficientSpec.reciprocal(),
    CoefficientSpec.saturating(0.5),
    CoefficientSpec.saturating(1.0),
]


class TestEvaluation:
    def test_constant_value(self):
        spec = CoefficientSpec.constant()
        assert spec.eval_a(7.3) == 1.0

    def test_reciprocal_value(self):
        spec = CoefficientSpec.reciprocal()
        assert spec.eval_a(2.0) == 0.5

    def test_power_half_value(self):
        spec = CoefficientSpec.power(0.5)
        assert spec.eval_a(4.0) == pytest.approx(2.0, rel=1e-15)

    def test_constant_derivative(self):
        assert CoefficientSpec.constant().eval_a_prime(3.0) == 0.0

    def test_reciprocal_derivative(self):
        assert CoefficientSpec.reciprocal().eval_a_prime(2.0) == pytest.approx(-0.25, rel=1e-15)

    def test_power_half_derivative(self):
        assert CoefficientSpec.power(0.5).eval_a_prime(4.0) == pytest.approx(0.25, rel=1e-15)

    def test_saturating_matches_direct_formula(self):
        spec = CoefficientSpec.saturating(0.7)
        r = np.geomspace(1e-3, 1e3, 50)
        direct = r**0.7 / (1.0 + r ** (0.7 - 1.0))
        np.testing.assert_allclose(spec.eval_a(r), direct, rtol=1e-13)

    def test_accepts_extreme_positive_arguments(self):
        for spec in ALL_CERTIFIED:
            for r in (1e-300, 1e300):
                val = spec.eval_a(r)
                assert np.isfinite(val) and val > 0.0

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
    def test_rejects_invalid_argument(self, bad):
        spec = CoefficientSpec.power(0.5)
        with pytest.raises(ValueError):
            spec.eval_a(bad)
        with pytest.raises(ValueError):
            spec.eval_a_prime(bad)

    def test_vectorized_evaluation(self):
        spec = CoefficientSpec.power(0.5)
        r = np.array([1.0, 4.0, 9.0])
        np.testing.assert_allclose(spec.eval_a(r), [1.0, 2.0, 3.0], rtol=1e-15)


class TestDerivativeConsistency:
    def test_analytic_derivative_matches_finite_difference(self):
        rng = np.random.default_rng(3)
        r = 10.0 ** rng.uniform(-3, 3, size=100)
        delta = 1e-6
        for spec in ALL_CERTIFIED:
            fd = (spec.eval_a(r * (1 + delta)) - spec.eval_a(r * (1 - delta))) / (2 * delta * r)
            ap = np.asarray(spec.eval_a_prime(r))
            scale = np.maximum(np.abs(ap), np.abs(spec.eval_a(r)) / r)
            assert np.max(np.abs(fd - ap) / scale) <= 1e-6, spec.family

    def test_custom_without_derivative_uses_finite_difference(self):
        spec = CoefficientSpec.custom(lambda r: np.sqrt(r), a0=1.0, p=0.5)
        assert spec.derivative_is_approximate
        assert spec.eval_a_prime(4.0) == pytest.approx(0.25, rel=1e-9)

    def test_custom_with_derivative_is_exact(self):
        spec = CoefficientSpec.custom(
            lambda r: np.sqrt(r), a0=1.0, p=0.5, fn_prime=lambda r: 0.5 / np.sqrt(r)
        )
        assert not spec.derivative_is_approximate
        assert spec.eval_a_prime(4.0) == 0.25


class TestCertificates:
    def test_power_half_certificate(self):
        # a(r)(r^p + r^-p) = r + 1 >= 1 for the square-root family
        report = verify_assumptions(CoefficientSpec.power(0.5))
        assert report.passed
        assert report.lower_bound_margin >= 0.0

    def test_constant_certificate(self):
        # 1 * (1 + 1) = 2 >= a0 = 2 with equality everywhere
        report = verify_assumptions(CoefficientSpec.constant())
        assert report.passed
        assert abs(report.lower_bound_margin) <= 1e-12

    def test_reciprocal_certificate(self):
        # (1/r)(r + 1/r) = 1 + r^-2 >= 1
        report = verify_assumptions(CoefficientSpec.reciprocal())
        assert report.passed

    def test_quadratic_custom_fails_growth_condition(self):
        # r|a'| = 2r^2 > r^2 = a at every r
        spec = CoefficientSpec.custom(
            lambda r: r**2, a0=1.0, p=2.0, fn_prime=lambda r: 2.0 * r
        )
        report = verify_assumptions(spec)
        assert not report.growth_ok
        assert not report.passed
        assert report.growth_margin < -0.5

    def test_growth_condition_all_certified_families(self):
        for spec in ALL_CERTIFIED:
            report = verify_assumptions(spec)
            assert report.growth_ok, spec.family
            assert report.growth_margin >= -1e-12

    def test_lower_bound_all_certified_families(self):
        for spec in ALL_CERTIFIED:
            report = verify_assumptions(spec)
            assert report.lower_bound_ok, (spec.family, report.lower_bound_margin)

    def test_steep_saturating_flagged_by_growth_check(self):
        # beta > 1 makes log a steeper than log r; the certificate reports it
        report = verify_assumptions(CoefficientSpec.saturating(2.0))
        assert not report.growth_ok

    def test_monotonicity_of_quotient_and_product(self):
        rng = np.random.default_rng(11)
        for spec in ALL_CERTIFIED:
            r = np.sort(10.0 ** rng.uniform(-6, 6, size=200))
            a = np.asarray(spec.eval_a(r))
            quot = a / r
            prod = a * r
            assert np.all(np.diff(quot) <= 1e-12 * np.maximum(quot[1:], quot[:-1])), spec.family
            assert np.all(np.diff(prod) >= -1e-12 * np.maximum(prod[1:], prod[:-1])), spec.family

    def test_default_grid(self):
        assert DEFAULT_R_GRID[0] == pytest.approx(1e-6)
        assert DEFAULT_R_GRID[-1] == pytest.approx(1e6)
        assert len(DEFAULT_R_GRID) == 400

    def test_rejects_bad_grid(self):
        spec = CoefficientSpec.constant()
        with pytest.raises(ValueError):
            verify_assumptions(spec, r_grid=np.array([]))
        with pytest.raises(ValueError):
            verify_assumptions(spec, r_grid=np.array([2.0, 1.0]))
        with pytest.raises(ValueError):
            verify_assumptions(spec, r_grid=np.array([-1.0, 1.0]))


class TestConstruction:
    def test_power_requires_admissible_exponent(self):
        with pytest.raises(ValueError):
            CoefficientSpec.power(1.5)
        with pytest.raises(ValueError):
            CoefficientSpec.power(0.0)

    def test_saturating_requires_positive_beta(self):
        with pytest.raises(ValueError):
            CoefficientSpec.saturating(0.0)

    def test_saturating_certificate_from_grid_minimum(self):
        spec = CoefficientSpec.saturating(0.5)
        assert spec.p == 0.5
        r = DEFAULT_R_GRID
        values = spec.eval_a(r) * (r**spec.p + r**-spec.p)
        assert spec.a0 <= np.min(values)
        assert spec.a0 > 0.0

    def test_from_config_round_trips(self):
        spec = CoefficientSpec.from_config({"family": "power", "alpha_c": 0.5})
        assert spec.family == "power" and spec.p == 0.5
        spec = CoefficientSpec.from_config({"family": "constant"})
        assert spec.a0 == 2.0
        spec = CoefficientSpec.from_config({"family": "constant", "a0": 1.0, "p": 0.5})
        assert spec.a0 == 1.0 and spec.p == 0.5

    def test_from_config_custom_expression(self):
        spec = CoefficientSpec.from_config({"family": "custom", "expr": "r**2", "a0": 1.0, "p": 2.0})
        assert spec.eval_a(3.0) == pytest.approx(9.0, rel=1e-12)
        report = verify_assumptions(spec)
        assert not report.passed

    def test_from_config_custom_requires_constants(self):
        with pytest.raises(ValueError):
            CoefficientSpec.from_config({"family": "custom", "expr": "r"})

    def test_from_config_rejects_unknown(self):
        with pytest.raises(ValueError):
            CoefficientSpec.from_config({"family": "mystery"})
        with pytest.raises(ValueError):
            CoefficientSpec.from_config({"family": "power", "alpha_c": 0.5, "typo": 1})
