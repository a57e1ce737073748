import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphsmooth import (
    InconsistentResponse,
    InvalidParameter,
    LowBandZero,
    MeanNotEigenvector,
    OrderTooHigh,
    WeightedGraph,
    ZeroFilter,
    absorb_mean,
    allpass,
    apply_filter,
    average_crossing_index,
    build_spectral_graph,
    claim1_check,
    expected_tv,
    filter_from_config,
    gft,
    lpf_order_ratio,
    make_box1_filter,
    path_graph,
    polynomial,
    pseudo_inverse_square,
    quadform_polynomial,
    smoothness_ratio,
    tabulated,
)
from _helpers import random_spectrum


@pytest.fixture(scope="module")
def path3():
    return build_spectral_graph(path_graph(3))


@pytest.fixture(scope="module")
def cycle4():
    # eigenvalues 0, 2, 2, 4: one repeated pair
    return build_spectral_graph(WeightedGraph(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0))))


class TestBox1:
    def test_gmrf_zero_at_dc(self, path3):
        h = make_box1_filter(path3, "gmrf")
        assert h.response[0] == 0.0
        assert h.energy == pytest.approx(3)

    def test_tikhonov_unnormalized(self, path3):
        h = make_box1_filter(path3, "tikhonov", False, alpha=1.0)
        np.testing.assert_allclose(h.response, [1, 0.5, 0.25], atol=1e-14)
        assert h.beta == 1.0

    def test_diffusion_normalized(self, path3):
        h = make_box1_filter(path3, "diffusion", tau=0.1)
        raw = np.exp(-0.1 * np.array([0.0, 1, 3]))
        np.testing.assert_allclose(h.response, raw * np.sqrt(3 / np.sum(raw**2)), rtol=1e-12)
        assert h.energy == pytest.approx(3, rel=1e-12)

    @pytest.mark.parametrize("kw", [{"alpha": 0.0}, {"alpha": -1.0}, {}])
    def test_bad_alpha(self, path3, kw):
        with pytest.raises(InvalidParameter):
            make_box1_filter(path3, "tikhonov", **kw)

    def test_bad_tau(self, path3):
        with pytest.raises(InvalidParameter):
            make_box1_filter(path3, "diffusion", tau=0.0)

    def test_allpass_normalized_via_tabulated(self, path3):
        h = tabulated(path3, np.ones(3), normalize=True)
        assert h.beta == 1.0
        np.testing.assert_array_equal(h.response, 1.0)


class TestSmoothnessRatio:
    def test_allpass(self, path3):
        assert smoothness_ratio(allpass(path3), path3) == pytest.approx(1.0)

    def test_dc_indicator(self, path3):
        assert smoothness_ratio(tabulated(path3, [1, 0, 0]), path3) == 0.0

    def test_tikhonov_path3(self, path3):
        h = make_box1_filter(path3, "tikhonov", False, alpha=1.0)
        # brute force: sum(l h^2) = 0.25 + 3/16, sum h^2 = 1.3125, lambda_avg = 4/3
        assert smoothness_ratio(h, path3) == pytest.approx(0.75 * 0.4375 / 1.3125, rel=1e-14)
        assert smoothness_ratio(h, path3) == pytest.approx(0.25, rel=1e-14)

    def test_zero_filter(self, path3):
        with pytest.raises(ZeroFilter):
            smoothness_ratio(tabulated(path3, np.zeros(3)), path3)

    @given(st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
    def test_scale_invariance(self, c):
        sg = build_spectral_graph(path_graph(5))
        h = make_box1_filter(sg, "tikhonov", alpha=0.3)
        assert smoothness_ratio(h.scaled(c), sg) == pytest.approx(smoothness_ratio(h, sg), rel=1e-14)

    @given(st.lists(st.booleans(), min_size=5, max_size=5))
    def test_sign_invariance(self, flips):
        sg = build_spectral_graph(path_graph(5))
        h = make_box1_filter(sg, "diffusion", tau=0.4)
        signs = np.where(flips, -1.0, 1.0)
        assert smoothness_ratio(tabulated(sg, signs * h.response), sg) == smoothness_ratio(h, sg)

    def test_box1_smooth_on_random_graphs(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            sg = random_spectrum(rng, 3, 25)
            for kind, kw in (("tikhonov", {"alpha": rng.uniform(0.01, 5)}), ("diffusion", {"tau": rng.uniform(0.01, 2)})):
                assert smoothness_ratio(make_box1_filter(sg, kind, **kw), sg) < 1

    def test_gmrf_smooth_on_sparse_graphs(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            sg = random_spectrum(rng, 10, 40, p=0.15)
            assert smoothness_ratio(make_box1_filter(sg, "gmrf"), sg) < 1

    @pytest.mark.parametrize("n", [3, 5, 10])
    def test_gmrf_not_smooth_on_complete_graph(self, n):
        # all nonzero eigenvalues equal n, so r = n / (n - 1)
        W = np.ones((n, n)) - np.eye(n)
        sg = build_spectral_graph(WeightedGraph.from_adjacency(W))
        assert smoothness_ratio(make_box1_filter(sg, "gmrf"), sg) == pytest.approx(n / (n - 1), rel=1e-9)

    def test_gmrf_not_smooth_on_short_path(self, path3):
        # lambda = (0, 1, 3): weights 1/lambda put most energy at lambda = 1 < avg, yet r = 9/8
        assert smoothness_ratio(make_box1_filter(path3, "gmrf"), path3) == pytest.approx(9 / 8)


class TestLPFRatio:
    def test_ideal_lpf(self):
        h = np.r_[np.ones(3), np.zeros(4)]
        from graphsmooth import SpectralFilter

        assert lpf_order_ratio(SpectralFilter(h), 3) == 0.0

    def test_allpass(self, path3):
        for k in (1, 2):
            assert lpf_order_ratio(allpass(path3), k) == 1.0

    def test_gmrf_low_band_zero(self, path3):
        with pytest.raises(LowBandZero):
            lpf_order_ratio(make_box1_filter(path3, "gmrf"), 1)

    def test_order_range(self, path3):
        with pytest.raises(OrderTooHigh):
            lpf_order_ratio(allpass(path3), 3)


class TestClaim1:
    def test_K_equals_J_bound_one(self):
        sg = build_spectral_graph(path_graph(6))
        J = average_crossing_index(sg)
        res = claim1_check(sg, make_box1_filter(sg, "tikhonov", alpha=1.0), J)
        assert res.J == J
        assert res.bound == pytest.approx(1.0)
        assert res.is_lpf_smooth == (res.eta < 1)

    def test_ideal_lpf_of_order_J(self):
        sg = build_spectral_graph(path_graph(7))
        J = average_crossing_index(sg)
        h = tabulated(sg, np.r_[np.ones(J), np.zeros(7 - J)])
        res = claim1_check(sg, h, J)
        assert res.is_lpf_smooth and res.eta == 0
        assert smoothness_ratio(h, sg) < 1

    def test_too_high(self, path3):
        J = average_crossing_index(path3)
        with pytest.raises(OrderTooHigh):
            claim1_check(path3, allpass(path3), J + 1)

    def test_failing_condition_reported(self):
        rng = np.random.default_rng(5)
        sg = build_spectral_graph(path_graph(8))
        J = average_crossing_index(sg)
        for _ in range(50):
            h = tabulated(sg, rng.uniform(0.1, 1, 8))
            for K in range(1, J + 1):
                res = claim1_check(sg, h, K)
                assert res.is_lpf_smooth == (res.eta**2 < res.bound)


class TestPseudoInverse:
    def test_allpass(self, path3):
        np.testing.assert_array_equal(pseudo_inverse_square(allpass(path3)).response, 1.0)

    def test_gmrf_gives_laplacian_spectrum(self, path3):
        h = make_box1_filter(path3, "gmrf")
        g = pseudo_inverse_square(h).response
        np.testing.assert_allclose(g, path3.eigenvalues / h.beta**2, rtol=1e-12, atol=1e-15)

    def test_zero_entry_kept(self, path3):
        assert pseudo_inverse_square(tabulated(path3, [2.0, 0.0, 1.0])).response[1] == 0.0

    def test_involution_on_support(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal(10)
        h[[2, 7]] = 0.0
        from graphsmooth import SpectralFilter

        g = pseudo_inverse_square(SpectralFilter(h)).response
        supp = h != 0
        # g is the response of the operator (h^2)^+; inverting it again restores h^2
        np.testing.assert_allclose(1.0 / g[supp], h[supp] ** 2, rtol=1e-12)
        assert np.all(g[~supp] == 0)


class TestApplyAndQuadform:
    def test_allpass_identity(self, path3):
        x = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(apply_filter(allpass(path3), path3, x), x, atol=1e-14)

    def test_eigenvector(self, path3):
        h = make_box1_filter(path3, "tikhonov", alpha=0.7)
        for n in range(3):
            v = path3.eigenvectors[:, n]
            np.testing.assert_allclose(apply_filter(h, path3, v), h.response[n] * v, atol=1e-14)

    def test_diffusion_attenuates(self, path3):
        h = make_box1_filter(path3, "diffusion", False, tau=0.5)
        x = np.array([1.0, 0.0, 0.0])
        out_t = gft(path3, apply_filter(h, path3, x))
        np.testing.assert_allclose(out_t, np.exp(-0.5 * path3.eigenvalues) * gft(path3, x), atol=1e-14)

    def test_identity_and_tv_coeffs(self, path3):
        X = np.random.default_rng(0).standard_normal((4, 3))
        assert quadform_polynomial(path3.laplacian, [1.0], X) == pytest.approx(np.sum(X**2))
        tv = sum(x @ path3.laplacian @ x for x in X)
        assert quadform_polynomial(path3.laplacian, [0.0, 1.0], X) == pytest.approx(tv)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_polynomial_vertex_vs_spectral(self, seed):
        rng = np.random.default_rng(seed)
        sg = random_spectrum(rng, 3, 15)
        coeffs = rng.standard_normal(4)
        X = rng.standard_normal((3, sg.n_nodes))
        spectral = np.sum(polynomial(sg, coeffs).response * gft(sg, X) ** 2)
        vertex = quadform_polynomial(sg.laplacian, coeffs, X)
        assert vertex == pytest.approx(spectral, rel=1e-9, abs=1e-9 * np.sum(np.abs(coeffs)) * np.sum(X**2) * sg.lambda_max**3)


class TestConsistency:
    def test_repeated_eigenvalue_rejects_inconsistent(self, cycle4):
        np.testing.assert_allclose(cycle4.eigenvalues, [0, 2, 2, 4], atol=1e-12)
        with pytest.raises(InconsistentResponse):
            tabulated(cycle4, [1.0, 0.9, 0.8, 0.1])
        tabulated(cycle4, [1.0, 0.8, 0.8, 0.1])

    def test_config(self, path3):
        h = filter_from_config(path3, {"kind": "tikhonov", "params": {"alpha": 0.2}})
        assert h.energy == pytest.approx(3)
        p = filter_from_config(path3, {"kind": "poly", "params": {"coeffs": [1, 0.5]}})
        np.testing.assert_allclose(p.response, 1 + 0.5 * path3.eigenvalues)
        s = filter_from_config(path3, {"kind": "allpass", "params": {"scale": 0.9}})
        np.testing.assert_allclose(s.response, 0.9)


class TestAbsorbMean:
    def test_zero_mean(self, path3):
        h = make_box1_filter(path3, "tikhonov", alpha=0.5)
        assert absorb_mean(path3, h, np.zeros(3), 1.0) is h

    def test_constant_mean(self, path3):
        h = make_box1_filter(path3, "tikhonov", alpha=0.5)
        mu = 2.0 * np.ones(3)
        out = absorb_mean(path3, h, mu, 0.5)
        c = path3.eigenvectors[:, 0] @ mu
        assert out.response[0] ** 2 == pytest.approx(h.response[0] ** 2 + c**2 / 0.5)
        assert expected_tv(path3, out, 0.5) == pytest.approx(expected_tv(path3, h, 0.5))

    def test_trace_identity(self, path3):
        h = make_box1_filter(path3, "diffusion", tau=0.3)
        mu = -1.7 * path3.eigenvectors[:, 1]
        sigma2 = 0.8
        out = absorb_mean(path3, h, mu, sigma2)
        lhs = sigma2 * np.trace(path3.laplacian @ path3.spectral_matrix(out.response**2))
        rhs = sigma2 * np.trace(path3.laplacian @ path3.spectral_matrix(h.response**2)) + mu @ path3.laplacian @ mu
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_misaligned(self, path3):
        with pytest.raises(MeanNotEigenvector):
            absorb_mean(path3, allpass(path3), np.array([1.0, 0.0, 0.0]), 1.0)

    def test_eigenspace_of_repeated_eigenvalue(self, cycle4):
        mu = cycle4.eigenvectors[:, 1] + 2 * cycle4.eigenvectors[:, 2]
        h = allpass(cycle4)
        out = absorb_mean(cycle4, h, mu, 1.0)
        assert expected_tv(cycle4, out, 1.0) == pytest.approx(expected_tv(cycle4, h, 1.0, mu), rel=1e-12)
