import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bspline_divided_difference, random_knots, sorted_quantile
from robust_pspline.basis import (
    KnotVector,
    design_matrix,
    eval_basis,
    eval_basis_deriv,
    make_knots,
)
from robust_pspline.exceptions import DegenerateDesignError, DomainError, OrderError


class TestMakeKnots:
    def test_cap_at_forty(self):
        xs = np.arange(160) / 159
        kv = make_knots(xs, p=4, k_max=40)
        assert kv.n_interior == 40
        assert kv.dim == 44

    def test_three_unique_values_give_no_interior_knots(self):
        xs = np.repeat([0.0, 0.5, 1.0], 100)
        kv = make_knots(xs, p=1, k_max=40)
        assert kv.n_interior == 0
        assert (kv.lo, kv.hi) == (0.0, 1.0)

    def test_quantile_placement_matches_sort_oracle(self):
        xs = np.linspace(0, 1, 100)
        kv = make_knots(xs, p=4, k_max=40)
        assert kv.n_interior == 25
        expected = [sorted_quantile(list(xs), (k + 1) / 27) for k in range(1, 26)]
        np.testing.assert_allclose(kv.interior, expected, rtol=0, atol=1e-15)
        assert kv.interior[0] == pytest.approx(sorted_quantile(list(xs), 2 / 27), abs=1e-15)

    def test_duplicates_are_ignored_for_placement(self):
        xs = np.repeat(np.linspace(0, 1, 40), 3)
        kv = make_knots(xs, p=4)
        assert kv.n_interior == 10

    def test_augmented_layout(self):
        kv = make_knots(np.linspace(2, 5, 37), p=3)
        aug = kv.augmented
        assert aug.size == kv.n_interior + 2 * 3
        assert np.all(aug[:3] == 2) and np.all(aug[-3:] == 5)
        assert np.all(np.diff(aug) >= 0)

    def test_too_few_unique_points(self):
        with pytest.raises(DegenerateDesignError):
            make_knots([0, 0, 1, 1, 2], p=4)

    def test_interior_knots_must_increase(self):
        with pytest.raises(DegenerateDesignError):
            KnotVector([0.5, 0.5], 0, 1, 4)
        with pytest.raises(DegenerateDesignError):
            KnotVector([1.0], 0, 1, 4)


class TestEvalBasis:
    def test_order_one_is_indicator(self):
        kv = KnotVector([0.5], 0, 1, 1)
        np.testing.assert_array_equal(eval_basis(kv, 0.25), [1.0, 0.0])
        np.testing.assert_array_equal(eval_basis(kv, 0.5), [0.0, 1.0])  # right-continuous
        np.testing.assert_array_equal(eval_basis(kv, 1.0), [0.0, 1.0])  # b in last interval

    def test_uniform_cubic_at_knot(self):
        kv = KnotVector(np.arange(1, 10) / 10, 0, 1, 4)
        vals = eval_basis(kv, 0.5)
        nz = np.flatnonzero(np.abs(vals) > 1e-14)
        np.testing.assert_allclose(vals[nz], [1 / 6, 4 / 6, 1 / 6], atol=1e-14)
        oracle = [bspline_divided_difference(kv.augmented, 4, i, 0.5) for i in range(kv.dim)]
        np.testing.assert_allclose(vals, oracle, atol=1e-12)

    def test_right_endpoint_is_defined(self):
        kv = KnotVector([0.3, 0.6], 0, 1, 4)
        vals = eval_basis(kv, 1.0)
        assert vals[-1] == pytest.approx(1.0)
        assert vals.sum() == pytest.approx(1.0)

    def test_divided_difference_oracle(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(40):
            p = int(rng.integers(2, 5))
            kv = KnotVector(random_knots(rng, p), 0.0, 1.0, p)
            x = rng.uniform(0, 1)
            got = eval_basis(kv, x)
            want = [bspline_divided_difference(kv.augmented, p, i, x) for i in range(kv.dim)]
            worst = max(worst, np.max(np.abs(got - want)))
        assert worst < 1e-8

    def test_domain_error(self):
        kv = KnotVector([0.5], 0, 1, 2)
        with pytest.raises(DomainError):
            eval_basis(kv, 1.0 + 1e-12)
        with pytest.raises(DomainError):
            eval_basis(kv, np.nan)


class TestDerivatives:
    def test_zeroth_derivative_is_value(self):
        kv = make_knots(np.linspace(0, 1, 50))
        for x in (0.0, 0.13, 0.5, 1.0):
            np.testing.assert_array_equal(eval_basis_deriv(kv, x, 0), eval_basis(kv, x))

    def test_first_derivative_sums_to_zero(self, rng):
        kv = make_knots(np.linspace(0, 1, 50))
        for x in rng.uniform(0, 1, 200):
            assert abs(eval_basis_deriv(kv, x, 1).sum()) < 1e-9

    def test_hat_function_slopes(self):
        kv = KnotVector([0.25, 0.75], 0, 1, 2)
        d = eval_basis_deriv(kv, 0.4, 1)
        # interval [0.25, 0.75): gap 0.5
        np.testing.assert_allclose(d, [0.0, -2.0, 2.0, 0.0], atol=1e-14)

    def test_order_error(self):
        kv = KnotVector([0.5], 0, 1, 3)
        with pytest.raises(OrderError):
            eval_basis_deriv(kv, 0.2, 3)
        with pytest.raises(OrderError):
            eval_basis_deriv(kv, 0.2, -1)

    def test_finite_difference(self):
        rng = np.random.default_rng(7)
        h = 1e-6
        for _ in range(30):
            p = int(rng.integers(2, 5))
            kv = KnotVector(random_knots(rng, p, min_gap=0.05), 0.0, 1.0, p)
            brk = kv.breakpoints
            x = rng.uniform(0.01, 0.99)
            if np.min(np.abs(brk - x)) < 1e-3:
                continue
            fd = (eval_basis(kv, x + h) - eval_basis(kv, x - h)) / (2 * h)
            np.testing.assert_allclose(eval_basis_deriv(kv, x, 1), fd, atol=1e-5)

    def test_higher_derivative_against_lower(self):
        # d^2/dx^2 by finite differences of the analytic first derivative
        kv = KnotVector([0.2, 0.45, 0.7], 0, 1, 4)
        h = 1e-6
        for x in (0.1, 0.33, 0.6, 0.9):
            fd = (eval_basis_deriv(kv, x + h, 1) - eval_basis_deriv(kv, x - h, 1)) / (2 * h)
            np.testing.assert_allclose(eval_basis_deriv(kv, x, 2), fd, atol=1e-4)


class TestDesignMatrix:
    def test_single_row(self):
        kv = make_knots(np.linspace(0, 1, 30))
        dm = design_matrix(kv, [0.42])
        np.testing.assert_array_equal(dm.toarray()[0], eval_basis(kv, 0.42))

    def test_rows_sum_to_one(self, rng):
        kv = make_knots(rng.uniform(0, 1, 300))
        xs = rng.uniform(kv.lo, kv.hi, 1000)
        dense = design_matrix(kv, xs).toarray()
        np.testing.assert_allclose(dense.sum(axis=1), 1.0, atol=1e-10)
        assert dense.min() >= 0.0 and dense.max() <= 1.0

    def test_local_support(self, rng):
        kv = make_knots(np.linspace(0, 1, 60), p=4)
        xs = np.sort(rng.uniform(0, 1, 2000))
        dense = design_matrix(kv, xs).toarray()
        aug = kv.augmented
        for j in range(kv.dim):
            outside = (xs < aug[j]) | (xs > aug[j + 4])
            assert np.all(dense[outside, j] == 0.0)
        assert np.all((dense > 0).sum(axis=1) <= 4)

    def test_band_metadata(self):
        kv = make_knots(np.linspace(0, 1, 40), p=3)
        dm = design_matrix(kv, np.linspace(0, 1, 7))
        dense = dm.toarray()
        for i in range(7):
            nz = np.flatnonzero(dense[i])
            assert nz.min() >= dm.first[i] and nz.max() < dm.first[i] + 3

    def test_matvec_matches_dense(self, rng):
        kv = make_knots(np.linspace(0, 1, 40))
        dm = design_matrix(kv, rng.uniform(0, 1, 50))
        beta = rng.standard_normal(kv.dim)
        np.testing.assert_allclose(dm @ beta, dm.toarray() @ beta, atol=1e-13)

    def test_duplicates_allowed(self):
        kv = make_knots(np.linspace(0, 1, 20))
        dm = design_matrix(kv, [0.3, 0.3, 0.3])
        assert np.array_equal(dm.values[0], dm.values[2])

    def test_error_reports_row(self):
        kv = make_knots(np.linspace(0, 1, 20))
        with pytest.raises(DomainError) as info:
            design_matrix(kv, [0.1, 0.2, 1.5, 0.3])
        assert info.value.index == 2


class TestKernelBackends:
    def test_backends_agree(self, kernels, rng):
        from robust_pspline import _kernels_py

        kv = make_knots(rng.uniform(0, 1, 200), p=4)
        xs = np.concatenate((rng.uniform(0, 1, 300), kv.interior, [0.0, 1.0]))
        for m in range(4):
            v1, f1 = kernels.bspline_rows(kv.augmented, 4, xs, m)
            v2, f2 = _kernels_py.bspline_rows(kv.augmented, 4, xs, m)
            np.testing.assert_array_equal(f1, f2)
            np.testing.assert_allclose(v1, v2, rtol=0, atol=1e-12 * 10**m)


@settings(max_examples=60, deadline=None)
@given(
    p=st.integers(1, 5),
    gaps=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=10),
    frac=st.floats(0.0, 1.0),
)
def test_partition_of_unity_property(p, gaps, frac):
    pts = np.concatenate(([0.0], np.cumsum(gaps)))
    kv = KnotVector(pts[1:-1], pts[0], pts[-1], p)
    x = pts[0] + frac * (pts[-1] - pts[0])
    vals = eval_basis(kv, x)
    assert abs(vals.sum() - 1.0) < 1e-10
    assert np.all(vals >= 0) and np.all(vals <= 1 + 1e-15)
    assert np.count_nonzero(vals) <= p
