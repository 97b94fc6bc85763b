"""Grid solvers against Riccati, bound, scaling, and self-convergence oracles."""

import math

import numpy as np
import pytest

from mlhjb import (
    ControlProblem,
    DiscountSpec,
    DivergenceError,
    DomainError,
    Policy,
    SolverConfig,
    StateEscapeError,
    catalog,
    evaluate_cost,
    kernel,
    lqr_oracle,
    min_hamiltonian,
    pre_hamiltonian,
    solve_classical,
    solve_fractional,
)

LQ = catalog.get("lq1d").problem
COARSE = SolverConfig(dt=0.01, horizon=5.0, nx=65)


def _lq_scaled(c: float) -> ControlProblem:
    return ControlProblem(
        dim_x=1,
        dynamics=lambda x, u, t: u,
        running_cost=lambda x, u, t: c * 0.5 * (x[..., 0] ** 2 + u[..., 0] ** 2),
        control_grid=np.linspace(-2.5, 2.5, 101)[:, None],
        state_box=[(-2.0, 2.0)],
    )


class TestProblemTypes:
    def test_control_problem_validation(self):
        with pytest.raises(DomainError):
            ControlProblem(3, lambda x, u, t: u, lambda x, u, t: 0.0, [[0.0]], [(-1, 1)] * 3)
        with pytest.raises(DomainError):
            ControlProblem(1, lambda x, u, t: u, lambda x, u, t: 0.0, [], [(-1, 1)])
        with pytest.raises(DomainError):
            ControlProblem(1, lambda x, u, t: u, lambda x, u, t: 0.0, [[0.0]], [(1, -1)])
        with pytest.raises(DomainError):
            ControlProblem(1, lambda x, u, t: u, lambda x, u, t: 0.0, [[0.0]], [(-1, 1)], boundary="wrap")

    def test_solver_config_validation(self):
        with pytest.raises(DomainError):
            SolverConfig(dt=0.0, horizon=1.0, nx=65)
        with pytest.raises(DomainError):
            SolverConfig(dt=0.3, horizon=1.0, nx=65)  # not an integer step count
        with pytest.raises(DomainError):
            SolverConfig(dt=0.1, horizon=1.0, nx=7)
        with pytest.raises(DomainError):
            SolverConfig(dt=0.1, horizon=1.0, nx=65, window=0)
        assert SolverConfig(dt=0.1, horizon=1.0, nx=65).steps == 10

    def test_stability_guard(self):
        with pytest.raises(DomainError):
            solve_classical(LQ, DiscountSpec(1.0, -200.0), COARSE)
        with pytest.warns(UserWarning):
            solve_classical(LQ, DiscountSpec(1.0, 200.0), SolverConfig(dt=0.01, horizon=0.05, nx=65))


class TestHamiltonian:
    def test_zero_everything(self):
        prob = ControlProblem(1, lambda x, u, t: np.zeros_like(x), lambda x, u, t: np.zeros(x.shape[:-1]), [[0.0]], [(-1, 1)])
        assert pre_hamiltonian(prob, [0.3], [0.0], [2.0]) == 0.0

    def test_scalar_example(self):
        # L = (x^2+u^2)/2, f = u: at x=1, u=-1, p=2 -> 1 - 2 = -1
        assert pre_hamiltonian(LQ, [1.0], [-1.0], [2.0]) == pytest.approx(-1.0, abs=1e-15)

    def test_costate_free(self):
        assert pre_hamiltonian(LQ, [1.0], [-1.0], [0.0]) == pytest.approx(1.0, abs=1e-15)

    def test_min_linear(self):
        prob = ControlProblem(
            1,
            lambda x, u, t: u,
            lambda x, u, t: np.zeros(x.shape[:-1]),
            [[-1.0], [0.0], [1.0]],
            [(-1, 1)],
        )
        val, idx = min_hamiltonian(prob, [0.0], [2.0])
        assert val == pytest.approx(-2.0) and idx == 0

    def test_tie_breaks_low_index(self):
        prob = ControlProblem(
            1,
            lambda x, u, t: np.zeros_like(x),
            lambda x, u, t: np.ones(x.shape[:-1]),
            [[-1.0], [0.0], [1.0]],
            [(-1, 1)],
        )
        val, idx = min_hamiltonian(prob, [0.5], [0.0])
        assert val == 1.0 and idx == 0

    def test_quadratic_argmin_near_continuous(self):
        val, idx = min_hamiltonian(LQ, [0.0], [2.0])
        ustar = LQ.controls[idx, 0]
        assert abs(ustar - (-2.0)) <= 0.5 * 0.05 + 1e-12


class TestSolveClassical:
    def test_zero_cost(self):
        prob = catalog.get("zero1d").problem
        fld, _ = solve_classical(prob, DiscountSpec(1.0, -0.5), SolverConfig(dt=0.01, horizon=1.0, nx=9))
        assert np.all(fld.values == 0.0)

    def test_requires_alpha_one(self):
        with pytest.raises(DomainError):
            solve_classical(LQ, DiscountSpec(0.8, -0.5), COARSE)

    def test_lqr_interior(self):
        cfg = SolverConfig(dt=0.005, horizon=10.0, nx=129)
        fld, _ = solve_classical(LQ, DiscountSpec(1.0, -0.5), cfg)
        P, _ = lqr_oracle(0.0, 1.0, 1.0, 1.0, -0.5)
        x = fld.axes[0]
        mask = np.abs(x) <= 1.0
        exact = 0.5 * P * x[mask] ** 2
        assert np.allclose(fld.values[0][mask], exact, rtol=0.02, atol=0.01)

    def test_strong_discount_bound(self):
        # V <= max L * dt / (1 - e^(lam dt)) for the geometric tail
        lam = -10.0
        cfg = SolverConfig(dt=0.01, horizon=2.0, nx=65)
        fld, _ = solve_classical(LQ, DiscountSpec(1.0, lam), cfg)
        lmax = 0.5 * (2.0**2 + 2.5**2)
        bound = lmax * cfg.dt / (1.0 - math.exp(lam * cfg.dt))
        assert fld.values.max() <= bound * (1.0 + 1e-12)

    def test_nonnegative_at_zero_rate(self):
        fld, _ = solve_classical(LQ, DiscountSpec(1.0, 0.0), COARSE)
        assert fld.values.min() >= 0.0

    def test_divergence_detected(self):
        prob = catalog.get("static1d").problem
        with pytest.raises(DivergenceError):
            solve_classical(prob, DiscountSpec(1.0, 5.0), SolverConfig(dt=0.01, horizon=20.0, nx=9))


class TestSolveFractional:
    def test_alpha_one_routes_to_classical(self):
        fld_c, pol_c = solve_classical(LQ, DiscountSpec(1.0, -0.5), COARSE)
        fld_f, pol_f = solve_fractional(LQ, DiscountSpec(1.0, -0.5), COARSE)
        assert np.array_equal(fld_f.values, fld_c.values)
        assert np.array_equal(pol_f.controls, pol_c.controls)

    def test_zero_cost_any_alpha(self):
        prob = catalog.get("zero1d").problem
        fld, _ = solve_fractional(prob, DiscountSpec(0.7, -0.5), SolverConfig(dt=0.01, horizon=1.0, nx=9))
        assert np.all(fld.values == 0.0)

    def test_kernel_ordering_then_field_ordering(self):
        # per-step discount comparison fixes the direction of the value ordering
        spec = DiscountSpec(0.8, -0.5)
        disc_frac = float(kernel(spec, COARSE.dt))
        disc_classical = math.exp(spec.lam * COARSE.dt)
        assert disc_frac < disc_classical  # heavier small-dt discounting for alpha < 1
        fld_f, _ = solve_fractional(LQ, spec, COARSE)
        fld_c, _ = solve_classical(LQ, DiscountSpec(1.0, spec.lam), COARSE)
        assert np.all(fld_f.values <= fld_c.values + 1e-12)

    def test_residual_field_shape_and_warmup(self):
        fld, _ = solve_fractional(LQ, DiscountSpec(0.8, -0.5), COARSE)
        assert fld.residual.shape == fld.values.shape
        assert np.all(np.isnan(fld.residual[: COARSE.window]))
        assert np.all(np.isfinite(fld.residual[COARSE.window : COARSE.steps]))

    def test_short_window_warns(self):
        cfg = SolverConfig(dt=0.02, horizon=1.0, nx=33, window=4)
        with pytest.warns(UserWarning):
            solve_fractional(LQ, DiscountSpec(0.8, -0.5), cfg)

    def test_residual_self_convergence(self):
        # window sized so the leading L1 truncation term cancels: alpha/(1-alpha) steps
        def worst_residual(dt, nx):
            cfg = SolverConfig(dt=dt, horizon=2.0, nx=nx, window=4)
            with pytest.warns(UserWarning):
                fld, _ = solve_fractional(LQ, DiscountSpec(0.8, -0.5), cfg)
            nt = cfg.steps
            rows = fld.residual[max(4, nt // 4) : 3 * nt // 4]
            return np.abs(rows[:, 2:-2]).max()

        r_coarse = worst_residual(0.02, 65)
        r_fine = worst_residual(0.01, 129)
        assert r_coarse / r_fine >= 1.5


class TestScalingAndConsistency:
    def test_cost_scaling_scales_value(self):
        spec = DiscountSpec(1.0, -0.5)
        f1, p1 = solve_classical(_lq_scaled(1.0), spec, COARSE)
        f2, p2 = solve_classical(_lq_scaled(2.0), spec, COARSE)
        assert np.array_equal(p1.controls, p2.controls)
        assert np.allclose(f2.values, 2.0 * f1.values, rtol=1e-12, atol=1e-12)

    def test_one_step_bellman_residual(self):
        # recompute the update at cell centers; interior residual is O(dt^2)-small
        spec = DiscountSpec(0.8, -0.5)
        cfg = SolverConfig(dt=0.01, horizon=2.0, nx=129)
        fld, _ = solve_fractional(LQ, spec, cfg)
        x = fld.axes[0]
        xc = 0.5 * (x[:-1] + x[1:])
        u = LQ.controls[:, 0]
        disc = float(kernel(spec, cfg.dt))
        i = cfg.steps // 2
        feet = xc[:, None] + u[None, :] * cfg.dt
        cand = 0.5 * (xc[:, None] ** 2 + u[None, :] ** 2) * cfg.dt + disc * np.interp(feet, x, fld.values[i + 1])
        rhs = cand.min(axis=1)
        lhs = np.interp(xc, x, fld.values[i])
        assert np.abs(lhs - rhs).max() <= 5.0 * cfg.dt**2


class TestEvaluateCost:
    def test_zero_cost(self):
        entry = catalog.get("zero1d")
        cfg = SolverConfig(dt=0.01, horizon=1.0, nx=9)
        j = evaluate_cost(entry.problem, DiscountSpec(1.0, -0.5), lambda x, t: np.array([0.0]), np.array([0.0]), cfg)
        assert j == 0.0

    def test_constant_cost_integral(self):
        # frozen state, L = 1: J = int_0^T e^(lam t) dt -> -1/lam
        entry = catalog.get("static1d")
        cfg = SolverConfig(dt=0.0025, horizon=40.0, nx=9)
        j = evaluate_cost(entry.problem, DiscountSpec(1.0, -1.0), lambda x, t: np.array([0.0]), np.array([0.0]), cfg)
        assert j == pytest.approx(1.0, abs=1e-5)

    def test_lqr_feedback_cost(self):
        P, k = lqr_oracle(0.0, 1.0, 1.0, 1.0, -0.5)
        cfg = SolverConfig(dt=0.005, horizon=20.0, nx=65)
        j = evaluate_cost(LQ, DiscountSpec(1.0, -0.5), lambda x, t: np.array([k * x[0]]), np.array([1.0]), cfg)
        assert j == pytest.approx(0.5 * P, rel=2e-3)

    def test_escape(self):
        cfg = SolverConfig(dt=0.01, horizon=5.0, nx=65)
        with pytest.raises(StateEscapeError):
            evaluate_cost(LQ, DiscountSpec(1.0, -0.5), lambda x, t: np.array([2.5]), np.array([1.0]), cfg)

    def test_x0_outside_box(self):
        with pytest.raises(DomainError):
            evaluate_cost(LQ, DiscountSpec(1.0, -0.5), lambda x, t: np.array([0.0]), np.array([3.0]), COARSE)

    def test_policy_rollout_and_perturbations(self):
        spec = DiscountSpec(1.0, -0.5)
        cfg = SolverConfig(dt=0.005, horizon=10.0, nx=129)
        fld, pol = solve_classical(LQ, spec, cfg)
        x0 = np.array([1.0])
        j_solved = evaluate_cost(LQ, spec, pol, x0, cfg)
        assert j_solved >= fld.at(x0) - 0.02
        rng = np.random.default_rng(20250814)
        nt = pol.controls.shape[0]
        for _ in range(10):
            perturbed = pol.controls.copy()
            start = rng.integers(0, nt - nt // 10)
            shift = rng.choice([-5, 5])
            block = perturbed[start : start + nt // 10]
            perturbed[start : start + nt // 10] = np.clip(block + shift, 0, len(LQ.controls) - 1)
            j_pert = evaluate_cost(LQ, spec, Policy(perturbed, pol.control_grid), x0, cfg)
            assert j_pert >= j_solved - 1e-3


class TestTwoDimensional:
    def test_osc2d_solves(self):
        entry = catalog.get("osc2d")
        cfg = SolverConfig(dt=0.02, horizon=1.0, nx=33)
        fld, pol = solve_fractional(entry.problem, DiscountSpec(0.8, -0.5), cfg)
        assert np.all(np.isfinite(fld.values))
        assert fld.values[0].shape == (33, 33)
        assert pol.controls.min() >= 0 and pol.controls.max() < len(entry.problem.controls)
        # value at the resting origin is the smallest on the grid
        mid = fld.values[0][16, 16]
        assert mid == fld.values[0].min()

    def test_alpha_one_equality_2d(self):
        entry = catalog.get("osc2d")
        cfg = SolverConfig(dt=0.02, horizon=0.5, nx=17)
        fld_c, _ = solve_classical(entry.problem, DiscountSpec(1.0, -0.5), cfg)
        fld_f, _ = solve_fractional(entry.problem, DiscountSpec(1.0, -0.5), cfg)
        assert np.array_equal(fld_c.values, fld_f.values)


class TestLqrOracle:
    def test_undiscounted_unit(self):
        P, k = lqr_oracle(0.0, 1.0, 1.0, 1.0, 0.0)
        assert P == pytest.approx(1.0, rel=1e-15)
        assert k == pytest.approx(-1.0, rel=1e-15)

    def test_zero_cost(self):
        P, k = lqr_oracle(-1.0, 1.0, 0.0, 1.0, 0.0)
        assert P == 0.0 and k == 0.0

    def test_golden_ratio_case(self):
        P, _ = lqr_oracle(1.0, 1.0, 1.0, 1.0, -1.0)
        assert P == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0, rel=1e-14)

    def test_riccati_equation_satisfied(self):
        a, b, q, r, lam = 0.3, 2.0, 1.5, 0.7, -0.4
        P, k = lqr_oracle(a, b, q, r, lam)
        assert (b * b / r) * P * P - (2.0 * a + lam) * P - q == pytest.approx(0.0, abs=1e-12)
        assert k == pytest.approx(-P * b / r, rel=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            lqr_oracle(0.0, 1.0, 1.0, 0.0, 0.0)
        with pytest.raises(DomainError):
            lqr_oracle(0.0, 1.0, -1.0, 1.0, 0.0)
        with pytest.raises(DomainError):
            lqr_oracle(0.0, 0.0, 1.0, 1.0, 0.0)


class TestBoundaryModes:
    def _drift(self, boundary):
        # uncontrolled rightward drift: feet leave the box at the right edge
        return ControlProblem(
            dim_x=1,
            dynamics=lambda x, u, t: np.ones_like(x),
            running_cost=lambda x, u, t: x[..., 0] ** 2,
            control_grid=[[0.0]],
            state_box=[(0.0, 1.0)],
            boundary=boundary,
        )

    def test_extrapolate_differs_from_clamp(self):
        cfg = SolverConfig(dt=0.01, horizon=2.0, nx=65)
        fld_e, _ = solve_classical(self._drift("extrapolate_linear"), DiscountSpec(1.0, -0.5), cfg)
        fld_c, _ = solve_classical(self._drift("clamp_gradient"), DiscountSpec(1.0, -0.5), cfg)
        assert np.all(np.isfinite(fld_e.values)) and np.all(np.isfinite(fld_c.values))
        assert not np.array_equal(fld_e.values, fld_c.values)
        # extrapolation sees the larger out-of-box cost at the right edge
        assert fld_e.values[0][-1] > fld_c.values[0][-1]
