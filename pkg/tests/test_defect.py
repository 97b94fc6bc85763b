"""Semigroup-defect quadrature against series-identity and dense-grid oracles."""

import math

import numpy as np
import pytest

from mlhjb import (
    ConvergenceError,
    DiscountSpec,
    DomainError,
    QuadratureConfig,
    delta_ml,
    inner_f,
    kernel,
    kernel_deriv,
    semigroup_residual,
    small_s_bound,
)
from mlhjb.defect import _adaptive_simpson

SPEC_HALF = DiscountSpec(0.5, -1.0)

# identity values from the 40-digit series oracle:
# delta(t,s) = E_a(lam t^a) E_a(lam s^a) - E_a(lam (t+s)^a)
DELTA_1_1 = -0.15337628784815240461    # E_0.5(-1)^2 - E_0.5(-sqrt(2))
DELTA_1_05 = -0.1494725113171817254    # E_0.5(-1) E_0.5(-sqrt(0.5)) - E_0.5(-sqrt(1.5))
INNER_1_05 = -0.2303461843572831354    # F(1) for s = 0.5, 40-digit quadrature


class TestQuadratureConfig:
    def test_defaults(self):
        q = QuadratureConfig()
        assert q.panels == 8 and q.scheme == "gauss_legendre"

    def test_validation(self):
        with pytest.raises(DomainError):
            QuadratureConfig(panels=3)
        with pytest.raises(DomainError):
            QuadratureConfig(scheme="midpoint")
        for split in (0.0, 1.0, -0.2):
            with pytest.raises(DomainError):
                QuadratureConfig(singularity_split=split)


class TestInnerF:
    def test_empty_interval(self):
        assert inner_f(SPEC_HALF, 1.0, 0.0) == 0.0

    def test_small_s_goes_to_zero(self):
        assert abs(inner_f(SPEC_HALF, 1.0, 1e-6)) < 1e-3

    def test_frozen_oracle(self):
        assert inner_f(SPEC_HALF, 1.0, 0.5) == pytest.approx(INNER_1_05, abs=1e-9)

    def test_dense_midpoint_oracle(self):
        # independent dense-grid route: substitute sigma = y^2, midpoint rule
        a, s, w, n = 0.5, 0.5, 1.0, 1_000_000
        h = math.sqrt(s) / n
        y = (np.arange(n) + 0.5) * h
        sig = y * y
        vals = (w + s - sig) ** (-a) / math.gamma(1.0 - a) * np.asarray(
            kernel_deriv(SPEC_HALF, sig)
        ) * 2.0 * y
        ref = float(vals.sum() * h)
        assert inner_f(SPEC_HALF, 1.0, 0.5) == pytest.approx(ref, rel=1e-8)

    def test_panel_doubling(self):
        f8 = inner_f(SPEC_HALF, 1.0, 0.5)
        f16 = inner_f(SPEC_HALF, 1.0, 0.5, QuadratureConfig(panels=16))
        assert abs(f16 - f8) < 1e-8 * abs(f16)

    def test_alpha_one_rejected(self):
        with pytest.raises(DomainError):
            inner_f(DiscountSpec(1.0, -1.0), 1.0, 0.5)

    def test_bad_times(self):
        with pytest.raises(DomainError):
            inner_f(SPEC_HALF, 0.0, 0.5)
        with pytest.raises(DomainError):
            inner_f(SPEC_HALF, 1.0, -0.5)

    def test_simpson_agrees(self):
        q = QuadratureConfig(scheme="adaptive_simpson")
        assert inner_f(SPEC_HALF, 1.0, 0.5, q) == pytest.approx(INNER_1_05, abs=1e-7)


class TestDeltaMl:
    def test_zero_s(self):
        assert delta_ml(SPEC_HALF, 1.0, 0.0) == 0.0

    def test_alpha_one_short_circuit(self):
        assert delta_ml(DiscountSpec(1.0, -1.0), 1.0, 1.0) == 0.0

    def test_lambda_zero(self):
        assert delta_ml(DiscountSpec(0.5, 0.0), 1.0, 1.0) == 0.0

    def test_frozen_identity_values(self):
        assert delta_ml(SPEC_HALF, 1.0, 1.0) == pytest.approx(DELTA_1_1, abs=2e-9)
        assert delta_ml(SPEC_HALF, 1.0, 0.5) == pytest.approx(DELTA_1_05, abs=2e-9)

    def test_near_exponential_limit(self):
        spec = DiscountSpec(0.999, -1.0)
        for t in (0.25, 1.0):
            for s in (0.25, 1.0):
                assert abs(delta_ml(spec, t, s)) <= 1e-3

    def test_symmetry_through_identity(self):
        # both orderings must reproduce the same kernel(t+s)
        spec = DiscountSpec(0.7, -0.5)
        assert abs(delta_ml(spec, 1.0, 0.5) - delta_ml(spec, 0.5, 1.0)) <= 2e-5

    def test_negative_s(self):
        with pytest.raises(DomainError):
            delta_ml(SPEC_HALF, 1.0, -0.25)

    def test_simpson_agrees_with_gauss(self):
        q = QuadratureConfig(scheme="adaptive_simpson")
        d_gl = delta_ml(SPEC_HALF, 1.0, 0.5)
        d_si = delta_ml(SPEC_HALF, 1.0, 0.5, q)
        assert abs(d_gl - d_si) <= 1e-6


class TestSemigroupResidual:
    def test_alpha_one_machine_zero(self):
        spec = DiscountSpec(1.0, -1.0)
        assert abs(semigroup_residual(spec, 1.0, 0.5)) < 1e-12

    def test_pinned_negative_lambda(self):
        assert abs(semigroup_residual(SPEC_HALF, 1.0, 0.5)) <= 1e-6

    def test_pinned_positive_lambda(self):
        assert abs(semigroup_residual(DiscountSpec(0.3, 0.5), 0.5, 0.25)) <= 1e-6

    def test_spot_grid_with_refinement(self):
        fine = QuadratureConfig(panels=16)
        for a in (0.3, 0.9):
            for lam in (-1.0, 0.5):
                spec = DiscountSpec(a, lam)
                assert abs(semigroup_residual(spec, 1.0, 1.0)) <= 1e-5
                assert abs(semigroup_residual(spec, 1.0, 1.0, fine)) <= 1e-7

    def test_consistency_with_parts(self):
        spec = DiscountSpec(0.6, -0.8)
        t, s = 0.75, 0.4
        manual = float(kernel(spec, t)) * float(kernel(spec, s)) - delta_ml(spec, t, s) - float(
            kernel(spec, t + s)
        )
        assert semigroup_residual(spec, t, s) == pytest.approx(manual, abs=1e-15)


class TestSmallSBound:
    def test_decreasing_column(self):
        rows = small_s_bound(SPEC_HALF, 1.0, [0.1, 0.01, 0.001])
        vals = [v for _, v in rows]
        assert vals[0] > vals[1] > vals[2] > 0.0

    def test_empty(self):
        assert small_s_bound(SPEC_HALF, 1.0, []) == []

    def test_alpha_one_zero_column(self):
        rows = small_s_bound(DiscountSpec(1.0, -1.0), 1.0, [0.1, 0.01])
        assert [v for _, v in rows] == [0.0, 0.0]

    def test_ascending_also_accepted(self):
        rows = small_s_bound(SPEC_HALF, 1.0, [0.001, 0.01, 0.1])
        vals = [v for _, v in rows]
        assert vals[0] < vals[1] < vals[2]

    def test_rejects_non_monotone(self):
        with pytest.raises(DomainError):
            small_s_bound(SPEC_HALF, 1.0, [0.1, 0.5, 0.2])

    def test_rejects_non_positive(self):
        with pytest.raises(DomainError):
            small_s_bound(SPEC_HALF, 1.0, [0.1, 0.0])


class TestAdaptiveSimpson:
    def test_smooth_integral(self):
        val = _adaptive_simpson(np.sin, 0.0, math.pi, 1e-12)
        assert val == pytest.approx(2.0, abs=1e-10)

    def test_empty_interval(self):
        assert _adaptive_simpson(np.sin, 1.0, 1.0, 1e-12) == 0.0

    def test_rough_integrand_raises(self):
        with pytest.raises(ConvergenceError):
            _adaptive_simpson(lambda x: np.sin(1e7 * x * x), 0.0, 1.0, 1e-14)
