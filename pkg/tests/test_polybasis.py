import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from specgcf.polybasis import (
    FilterParams,
    basis_values,
    eval_basis_scalar,
    filter_response,
    jacobi_coeffs,
    transfer,
)

GRID = np.linspace(-1, 1, 101)
exponents = st.floats(-0.9, 3.0, allow_nan=False)


def jac(a, b, K=6):
    return FilterParams(basis="jacobi", order=K, a=a, b=b)


class TestCoefficients:
    def test_a1_b1(self):
        assert tuple(jacobi_coeffs(2, 1, 1)) == (1.875, 0.0, 0.75)

    def test_legendre_case(self):
        assert tuple(jacobi_coeffs(2, 0, 0)) == (1.5, 0.0, 0.5)

    @pytest.mark.parametrize("a", [-0.5, 0.3, 2.0])
    def test_symmetric_shift_vanishes(self, a):
        assert jacobi_coeffs(3, a, a).theta_prime == 0.0

    def test_order_below_two(self):
        with pytest.raises(ValueError):
            jacobi_coeffs(1, 0, 0)

    @settings(max_examples=60, deadline=None)
    @given(k=st.integers(2, 16), a=exponents, b=exponents)
    def test_finite(self, k, a, b):
        assert np.all(np.isfinite(jacobi_coeffs(k, a, b)))


class TestScalar:
    def test_examples(self):
        assert eval_basis_scalar(jac(0, 0, 1), 1, 0.7) == pytest.approx(0.7, abs=1e-15)
        assert eval_basis_scalar(jac(0, 0, 2), 2, 0.5) == pytest.approx(-0.125, abs=1e-15)
        assert eval_basis_scalar(jac(1, 1, 3), 3, -1.0) == pytest.approx(-4.0, abs=1e-12)
        assert eval_basis_scalar(FilterParams(basis="monomial", order=3), 3, 0.5) == 0.125

    def test_k_above_order(self):
        with pytest.raises(ValueError):
            eval_basis_scalar(jac(0, 0, 2), 3, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(a=exponents, b=exponents)
    def test_matches_scipy(self, a, b):
        vals = basis_values(jac(a, b), GRID)
        for k in range(7):
            np.testing.assert_allclose(vals[k], special.eval_jacobi(k, a, b, GRID), rtol=1e-9, atol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(a=exponents, b=exponents)
    def test_endpoint_identities(self, a, b):
        vals = basis_values(jac(a, b), [-1.0, 1.0])
        for k in range(7):
            assert vals[k, 1] == pytest.approx(special.binom(k + a, k), rel=1e-10)
            assert vals[k, 0] == pytest.approx((-1) ** k * special.binom(k + b, k), rel=1e-10)

    def test_legendre_closed_forms(self):
        x = GRID
        closed = [
            np.ones_like(x), x, (3 * x**2 - 1) / 2, (5 * x**3 - 3 * x) / 2,
            (35 * x**4 - 30 * x**2 + 3) / 8, (63 * x**5 - 70 * x**3 + 15 * x) / 8,
            (231 * x**6 - 315 * x**4 + 105 * x**2 - 5) / 16,
        ]
        for basis in ("jacobi", "legendre"):
            vals = basis_values(FilterParams(basis=basis, order=6, a=0, b=0), x)
            np.testing.assert_allclose(vals, np.array(closed), rtol=0, atol=1e-10)

    def test_chebyshev_closed_form(self):
        vals = basis_values(FilterParams(basis="chebyshev", order=6), GRID)
        np.testing.assert_allclose(vals, np.cos(np.arange(7)[:, None] * np.arccos(GRID)), atol=1e-12)

    def test_jacobi_half_is_scaled_chebyshev(self):
        x = np.linspace(-0.999, 0.999, 301)
        jv = basis_values(jac(-0.5, -0.5), x)
        tv = np.cos(np.arange(7)[:, None] * np.arccos(x))
        for k in range(7):
            keep = np.abs(tv[k]) > 1e-3
            ratio = jv[k, keep] / tv[k, keep]
            assert np.ptp(ratio) <= 1e-9 * abs(ratio.mean())

    def test_bernstein_partition_of_unity(self):
        vals = basis_values(FilterParams(basis="bernstein", order=5), GRID)
        np.testing.assert_allclose(vals.sum(0), 1.0, atol=1e-14)
        assert np.all(vals >= 0)


class TestOrthogonality:
    @pytest.mark.parametrize("a,b", [(0, 0), (1, 1), (2, 0), (1, 2)])
    def test_composite_quadrature(self, a, b):
        # composite Simpson on 2001 points; integer exponents keep the weight smooth
        x = np.linspace(-1, 1, 2001)
        w = (1 - x) ** a * (1 + x) ** b
        vals = basis_values(jac(a, b, 4), x)
        simpson = np.ones_like(x)
        simpson[1:-1:2], simpson[2:-1:2] = 4, 2
        simpson *= (x[1] - x[0]) / 3
        for m in range(5):
            for n in range(m):
                assert abs(np.sum(simpson * w * vals[m] * vals[n])) <= 1e-6

    @pytest.mark.parametrize("a,b", [(-0.5, -0.5), (0.5, -0.3), (1.7, 0.2)])
    def test_gauss_jacobi(self, a, b):
        nodes, weights = special.roots_jacobi(10, a, b)
        vals = basis_values(jac(a, b, 4), nodes)
        gram = (vals * weights) @ vals.T
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() <= 1e-10


class TestResponse:
    @pytest.mark.parametrize("K", [1, 3])
    def test_band_stop_endpoints(self, K):
        fp = FilterParams(order=K, a=1, b=1)
        curve = filter_response(fp, "band_stop", [-1.0, 0.0, 1.0])
        assert curve[0, 1] == pytest.approx(-0.5, abs=1e-12)
        assert curve[2, 1] == pytest.approx((K + 2) / 2, abs=1e-12)

    def test_mid_band_suppressed(self):
        curve = filter_response(FilterParams(order=3, a=1, b=1), "band_stop", [0.0, 1.0])
        assert abs(curve[0, 1]) < curve[1, 1] / 3

    @pytest.mark.parametrize("K", [0, 2, 4])
    def test_monomial_normalized(self, K):
        curve = filter_response(FilterParams(basis="monomial", order=K), "band_stop", [1.0])
        assert curve[0, 1] == pytest.approx(1.0, abs=1e-15)

    def test_grid_bounds(self):
        with pytest.raises(ValueError):
            filter_response(FilterParams(), "band_stop", [1.5])

    @settings(max_examples=50, deadline=None)
    @given(a=exponents, b=exponents, K=st.integers(0, 8), alpha=st.floats(-5, 5),
           basis=st.sampled_from(["jacobi", "chebyshev", "legendre", "monomial", "bernstein"]))
    def test_band_pass_bounded(self, a, b, K, alpha, basis):
        fp = FilterParams(basis=basis, order=K, a=a, b=b, alpha=alpha)
        resp = filter_response(fp, "band_pass", GRID)[:, 1]
        assert np.all(np.abs(resp) <= 1.0)

    def test_transfer_is_weighted_sum(self):
        fp = FilterParams(order=3, a=0.5, b=1.5, order_weights=(0.1, 0.2, 0.3, 0.4), discount=0.5)
        vals = basis_values(fp, GRID)
        expected = sum(w * 0.5**k * vals[k] for k, w in enumerate((0.1, 0.2, 0.3, 0.4)))
        np.testing.assert_allclose(transfer(fp, GRID), expected, rtol=1e-14)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(a=-1.0), dict(b=-2.0), dict(order=17), dict(order=-1),
                                    dict(discount=0.0), dict(discount=1.1), dict(basis="hermite"),
                                    dict(order=2, order_weights=(0.5, 0.5))])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            FilterParams(**kw)

    def test_default_weights_sum_to_one(self):
        for K in range(5):
            assert FilterParams(order=K).weights.sum() == pytest.approx(1.0, abs=1e-15)
