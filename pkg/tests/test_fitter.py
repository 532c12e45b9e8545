import numpy as np
import pytest

from oracles import dense_pls, dense_trace
from robust_pspline import loss
from robust_pspline.basis import design_matrix, make_knots
from robust_pspline.exceptions import DomainError, FitError
from robust_pspline.fitter import (
    FitConfig,
    FitResult,
    estimating_equation,
    fit,
    gcv_score,
    irwls,
    lambda_reference,
    penalized_objective,
    predict,
    select_lambda,
)
from robust_pspline.penalty import penalty_matrix
from robust_pspline.simulate import f1


def setup(xs, p=4, q=2, k_max=40):
    kv = make_knots(xs, p=p, k_max=k_max)
    return kv, design_matrix(kv, xs), penalty_matrix(kv, q)


@pytest.fixture
def noisy(rng):
    n = 150
    xs = np.sort(rng.uniform(0, 1, n))
    ys = f1(xs) + 0.5 * rng.standard_normal(n)
    kv, B, D = setup(xs)
    return xs, ys, kv, B, D


class TestIRWLS:
    def test_quadratic_one_step_matches_dense(self, noisy):
        xs, ys, kv, B, D = noisy
        lam, sigma = 1e-5, 0.7
        res = irwls(B, D, ys, loss.quadratic(), sigma, lam)
        assert res.iterations == 1 and res.converged
        want, _ = dense_pls(B.toarray(), ys, D.toarray(), lam, sigma)
        assert np.abs(res.beta - want).max() <= 1e-8 * np.abs(want).max()

    def test_zero_penalty_is_regression_spline(self, noisy):
        xs, ys, kv, B, D = noisy
        res = irwls(B, D, ys, loss.quadratic(), 1.0, 0.0)
        want, *_ = np.linalg.lstsq(B.toarray(), ys, rcond=None)
        np.testing.assert_allclose(res.beta, want, rtol=1e-8, atol=1e-8)

    def test_huber_bounded_influence(self, rng):
        n = 100
        xs = np.linspace(0, 1, n)
        ys = 2 * xs + 0.1 * rng.standard_normal(n)
        kv, B, D = setup(xs)
        fits = {}
        for name, spec in (("huber", loss.huber()), ("ls", loss.quadratic())):
            for big in (1e4, 1e6):
                y = ys.copy()
                y[40] += big
                res = irwls(B, D, y, spec, 0.1, 1e-4)
                fits[name, big] = B @ res.beta
        rel = np.abs(fits["huber", 1e6] - fits["huber", 1e4]).max() / np.abs(fits["huber", 1e4]).max()
        assert rel < 0.01
        assert np.abs(fits["ls", 1e6] - fits["ls", 1e4]).max() > 100

    def test_descent_for_convex_losses(self, noisy):
        xs, ys, kv, B, D = noisy
        ys = ys.copy()
        ys[::17] += 8.0
        for spec in (loss.huber(), loss.smoothed_huber(), loss.huber(0.5)):
            res = irwls(B, D, ys, spec, 0.5, 1e-5, check_descent=True)
            assert res.converged
            assert np.all(np.diff(res.objective) <= 1e-12 * np.abs(res.objective[:-1]))

    def test_fixed_point_normal_equations(self, noisy):
        xs, ys, kv, B, D = noisy
        lam, sigma = 1e-5, 0.5
        res = irwls(B, D, ys, loss.huber(), sigma, lam, tol=1e-12)
        Bd, Dd = B.toarray(), D.toarray()
        w = res.weights
        A = Bd.T @ (w[:, None] * Bd) + 2 * ys.size * lam * sigma**2 * Dd
        rhs = Bd.T @ (w * ys)
        assert np.abs(A @ res.beta - rhs).max() <= 1e-6 * (1 + np.abs(rhs).max())

    def test_estimating_equation_vanishes(self, noisy):
        xs, ys, kv, B, D = noisy
        res = irwls(B, D, ys, loss.huber(), 0.5, 1e-5, tol=1e-12)
        g = estimating_equation(B, D, ys, loss.huber(), 0.5, 1e-5, res.beta)
        assert np.abs(g).max() <= 1e-8

    def test_weights_in_unit_interval(self, noisy):
        xs, ys, kv, B, D = noisy
        for spec in (loss.huber(), loss.tukey(), loss.smoothed_huber()):
            w = irwls(B, D, ys, spec, 0.3, 1e-5).weights
            assert np.all((w >= 0) & (w <= 1))

    def test_tukey_terminates_below_start(self, noisy):
        xs, ys, kv, B, D = noisy
        ys = ys.copy()
        ys[::10] += 20.0
        start = irwls(B, D, ys, loss.huber(), 0.5, 1e-5).beta
        res = irwls(B, D, ys, loss.tukey(), 0.5, 1e-5, beta0=start)
        assert res.iterations <= 100
        assert res.objective[-1] <= penalized_objective(B, D, ys, loss.tukey(), 0.5, 1e-5, start) + 1e-12

    def test_bad_arguments(self, noisy):
        xs, ys, kv, B, D = noisy
        with pytest.raises(ValueError):
            irwls(B, D, ys, loss.huber(), 0.0, 1.0)
        with pytest.raises(ValueError):
            irwls(B, D, ys, loss.huber(), 1.0, -1.0)
        with pytest.raises(ValueError):
            irwls(B, D, ys[:-1], loss.huber(), 1.0, 1.0)


@pytest.mark.parametrize("spec", [loss.smoothed_huber(), loss.tukey(), loss.quadratic(), loss.huber()],
                         ids=lambda s: s.family)
def test_gradient_matches_finite_differences(spec, noisy, rng):
    xs, ys, kv, B, D = noisy
    lam, sigma = 1e-4, 0.5
    base = irwls(B, D, ys, loss.quadratic(), sigma, lam).beta
    h = 1e-6
    for _ in range(5):
        beta = base + 0.3 * rng.standard_normal(kv.dim)
        g = estimating_equation(B, D, ys, spec, sigma, lam, beta)
        fd = np.empty_like(g)
        for j in range(kv.dim):
            e = np.zeros(kv.dim)
            e[j] = h
            fd[j] = (penalized_objective(B, D, ys, spec, sigma, lam, beta + e)
                     - penalized_objective(B, D, ys, spec, sigma, lam, beta - e)) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-3)


class TestGCV:
    def test_quadratic_is_classical_gcv(self, noisy):
        xs, ys, kv, B, D = noisy
        lam = 1e-5
        g, info = gcv_score(B, D, ys, loss.quadratic(), 1.0, lam)
        beta, _ = dense_pls(B.toarray(), ys, D.toarray(), lam, 1.0)
        tr = dense_trace(B.toarray(), np.ones(ys.size), D.toarray(), lam, 1.0)
        rss = np.mean((ys - B.toarray() @ beta) ** 2)
        assert g == pytest.approx(rss / (1 - tr / ys.size) ** 2, rel=1e-8)
        assert info.edf == pytest.approx(tr, rel=1e-8)

    def test_huge_penalty_line(self, rng):
        n = 200
        xs = np.sort(rng.uniform(0, 1, n))
        ys = 1 - 3 * xs + 0.2 * rng.standard_normal(n)
        kv, B, D = setup(xs)
        g, info = gcv_score(B, D, ys, loss.quadratic(), 1.0, 1e12)
        assert info.edf == pytest.approx(2.0, abs=0.01)
        resid = ys - np.polyval(np.polyfit(xs, ys, 1), xs)
        assert info.rss_weighted == pytest.approx(np.mean(resid**2), rel=1e-6)
        np.testing.assert_allclose(B @ info.beta, ys - resid, atol=1e-4)

    def test_nonnegative(self, noisy):
        xs, ys, kv, B, D = noisy
        for spec in (loss.huber(), loss.tukey(), loss.quadratic()):
            for lam in (1e-8, 1e-4, 1.0):
                assert gcv_score(B, D, ys, spec, 0.5, lam)[0] >= 0


def _grid_oracle(B, D, ys, spec, sigma, num):
    ref = lambda_reference(B, D, sigma)
    best = (np.inf, None)
    for u in np.linspace(-10, 10, num):
        try:
            g, info = gcv_score(B, D, ys, spec, sigma, ref * 10**u)
        except Exception:
            continue
        if g < best[0]:
            best = (g, info)
    return best


class TestSelectLambda:
    def test_linear_truth_gives_large_lambda(self):
        # GCV itself undersmooths on some draws; this seed is one where the
        # grid oracle lands in the null space, so the optimizer must as well
        rng = np.random.default_rng(0)
        n = 120
        xs = np.sort(rng.uniform(0, 1, n))
        ys = 2 + xs + 0.3 * rng.standard_normal(n)
        kv, B, D = setup(xs)
        lam = select_lambda(B, D, ys, loss.quadratic(), 0.3)
        g, info = gcv_score(B, D, ys, loss.quadratic(), 0.3, lam)
        g_grid, grid_info = _grid_oracle(B, D, ys, loss.quadratic(), 0.3, 50)
        assert grid_info.edf <= 2.5
        assert info.edf <= 2.5
        assert g <= g_grid * 1.01

    def test_wiggly_noiseless_gives_small_lambda(self):
        n = 200
        xs = np.linspace(0, 1, n)
        ys = np.sin(12 * np.pi * xs)
        kv, B, D = setup(xs)
        lam = select_lambda(B, D, ys, loss.quadratic(), 0.05)
        g, info = gcv_score(B, D, ys, loss.quadratic(), 0.05, lam)
        assert info.edf >= 0.8 * kv.dim
        g_grid, _ = _grid_oracle(B, D, ys, loss.quadratic(), 0.05, 50)
        assert g <= g_grid * 1.01

    def test_nelder_mead_not_worse_than_grid(self):
        for seed in range(4):
            rng = np.random.default_rng(seed)
            xs = np.sort(rng.uniform(0, 1, 100))
            ys = f1(xs) + rng.standard_t(3, 100)
            kv, B, D = setup(xs)
            for spec in (loss.huber(), loss.quadratic()):
                lam = select_lambda(B, D, ys, spec, 1.0)
                g = gcv_score(B, D, ys, spec, 1.0, lam)[0]
                assert g <= _grid_oracle(B, D, ys, spec, 1.0, 25)[0] * 1.05

    def test_trace_records_evaluations(self, noisy):
        xs, ys, kv, B, D = noisy
        trace = []
        lam = select_lambda(B, D, ys, loss.huber(), 0.5, trace=trace)
        assert len(trace) >= 3
        assert lam in [t[0] for t in trace]

    def test_unit_invariance(self, noisy):
        xs, ys, kv, B, D = noisy
        lam1 = select_lambda(B, D, ys, loss.huber(), 0.5)
        xs2 = 100 * xs
        kv2, B2, D2 = setup(xs2)
        lam2 = select_lambda(B2, D2, 7 * ys, loss.huber(), 3.5)
        e1 = gcv_score(B, D, ys, loss.huber(), 0.5, lam1)[1].edf
        e2 = gcv_score(B2, D2, 7 * ys, loss.huber(), 3.5, lam2)[1].edf
        assert e2 == pytest.approx(e1, rel=1e-4)


class TestFit:
    def test_exact_line(self):
        xs = np.linspace(0, 2, 60)
        res = fit(xs, 3 * xs + 1, FitConfig(loss=loss.huber()))
        np.testing.assert_allclose(res.fitted, 3 * xs + 1, atol=1e-6)

    def test_translation(self, rng):
        xs = np.sort(rng.uniform(0, 1, 100))
        ys = f1(xs) + rng.standard_normal(100)
        cfg = FitConfig(loss=loss.huber(), lam=1e-5)
        a, b = fit(xs, ys, cfg), fit(xs, ys + 10, cfg)
        np.testing.assert_allclose(b.fitted, a.fitted + 10, atol=1e-8)

    def test_huber_close_to_ls_under_gaussian_noise(self):
        rng = np.random.default_rng(2024)
        t = np.arange(1, 101) / 100
        ys = f1(t) + rng.standard_normal(100)
        mse = {}
        for name, spec in (("huber", loss.huber()), ("ls", loss.quadratic())):
            mse[name] = np.mean((fit(t, ys, FitConfig(loss=spec)).fitted - f1(t)) ** 2)
        assert mse["huber"] <= 2 * mse["ls"]

    def test_scale_equivariance_without_penalty(self, rng):
        xs = np.sort(rng.uniform(0, 1, 80))
        ys = f1(xs) + rng.standard_normal(80)
        cfg = FitConfig(loss=loss.quadratic(), lam=0.0)
        a, b = fit(xs, ys, cfg), fit(xs, -4.5 * ys, cfg)
        np.testing.assert_allclose(b.fitted, -4.5 * a.fitted, rtol=1e-10, atol=1e-10)

    def test_huge_lambda_is_straight_line(self, rng):
        xs = np.sort(rng.uniform(0, 1, 100))
        ys = f1(xs) + rng.standard_normal(100)
        res = fit(xs, ys, FitConfig(loss=loss.quadratic(), lam=1e12))
        np.testing.assert_allclose(res.fitted, np.polyval(np.polyfit(xs, ys, 1), xs), atol=1e-4)

    def test_unsorted_input_keeps_order(self, rng):
        xs = rng.uniform(0, 1, 90)
        ys = f1(xs) + 0.3 * rng.standard_normal(90)
        res = fit(xs, ys, FitConfig(lam=1e-5))
        order = np.argsort(xs)
        res_s = fit(xs[order], ys[order], FitConfig(lam=1e-5))
        np.testing.assert_allclose(res.fitted[order], res_s.fitted, atol=1e-12)
        np.testing.assert_array_equal(res.x, xs)

    def test_result_invariants(self, rng):
        xs = np.sort(rng.uniform(0, 1, 120))
        ys = f1(xs) + rng.standard_t(2, 120)
        res = fit(xs, ys, FitConfig(loss=loss.tukey()))
        assert np.all((res.weights >= 0) & (res.weights <= 1))
        np.testing.assert_array_equal(res.fitted, design_matrix(res.knots, xs) @ res.beta)
        assert 2 - 1e-6 <= res.edf <= res.knots.dim + 1e-6
        assert res.gcv >= 0 and res.sigma_hat > 0 and res.lambda_hat > 0

    def test_deterministic(self, rng):
        xs = np.sort(rng.uniform(0, 1, 100))
        ys = f1(xs) + rng.standard_normal(100)
        a, b = fit(xs, ys), fit(xs, ys)
        assert a.lambda_hat == b.lambda_hat
        np.testing.assert_array_equal(a.beta, b.beta)

    @pytest.mark.parametrize("method", ["iqr", "mad", "diff_median", "gasser", 0.8])
    def test_scale_methods(self, rng, method):
        xs = np.sort(rng.uniform(0, 1, 100))
        ys = f1(xs) + 0.8 * rng.standard_normal(100)
        res = fit(xs, ys, FitConfig(scale_method=method))
        assert 0.4 < res.sigma_hat < 1.6

    def test_input_errors(self):
        with pytest.raises(FitError) as info:
            fit([0, 1, 2], [0, 1, 2])
        assert info.value.stage == "input"
        with pytest.raises(FitError):
            fit([0, 1, 2, 3, np.nan, 5], np.zeros(6))
        with pytest.raises(FitError):
            fit(np.arange(10.0), np.zeros(9))
        with pytest.raises(FitError) as info:
            fit([0, 0, 0, 1, 1, 1], np.zeros(6))
        assert info.value.stage == "basis"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FitConfig(p=4, q=4)
        with pytest.raises(ValueError):
            FitConfig(k_max=0)
        with pytest.raises(ValueError):
            FitConfig(irwls_tol=0)
        with pytest.raises(ValueError):
            FitConfig(scale_method="sn")


class TestPredict:
    @pytest.fixture
    def line_fit(self):
        xs = np.linspace(0, 1, 41)
        return xs, fit(xs, 5 - 2 * xs, FitConfig(loss=loss.huber()))

    def test_training_points(self, line_fit):
        xs, res = line_fit
        np.testing.assert_allclose(predict(res, xs), res.fitted, atol=1e-14)

    def test_midpoints_on_line(self, line_fit):
        xs, res = line_fit
        mid = 0.5 * (xs[1:] + xs[:-1])
        np.testing.assert_allclose(predict(res, mid), 5 - 2 * mid, atol=1e-8)

    def test_boundary_scalar(self, line_fit):
        xs, res = line_fit
        v = predict(res, 1.0)
        assert isinstance(v, float) and v == pytest.approx(res.beta[-1])

    def test_no_extrapolation(self, line_fit):
        xs, res = line_fit
        with pytest.raises(DomainError):
            predict(res, [0.5, 1.01])

    def test_dict_round_trip(self, line_fit):
        xs, res = line_fit
        back = FitResult.from_dict(res.to_dict())
        np.testing.assert_allclose(predict(back, xs), res.fitted, atol=1e-10)
        assert back.knots == res.knots and back.loss == res.loss
