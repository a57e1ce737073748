"""Acceptance checks.

Every test records a PASS/FAIL line through ``_acceptance.record`` before
asserting, so the summary at the end of the run lists all ten criteria even
when some of them fail. Seeds are fixed up front and never tuned.
"""

import math
import time

import numpy as np
import pytest

from _acceptance import record
from _helpers import random_connected_graph
from graphsmooth import (
    ExperimentSpec,
    SpectralFilter,
    WeightedGraph,
    absorb_mean,
    allpass,
    alpha_for_ratio,
    build_spectral_graph,
    claim1_check,
    expected_tv,
    gft,
    law_from_filters,
    lrt_statistic,
    make_box1_filter,
    make_detector,
    ml_filter_estimate,
    pd_sweep,
    quadform_cdf,
    quadform_polynomial,
    semi_r_hat,
    smoothness_ratio,
    tabulated,
    total_variation,
    total_variation_edges,
)
from graphsmooth.simulate import resolve_graph, roc_curves, scaling_experiment, simulate_statistics, trial_rng

SEED = 0
TRIALS = 10_000


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def _sqrt_pinv_matrix(sg):
    lam = sg.eigenvalues
    d = np.zeros_like(lam)
    d[1:] = 1 / np.sqrt(lam[1:])
    return sg.spectral_matrix(d)


@pytest.fixture(scope="module")
def fig_spec():
    return ExperimentSpec(seed=SEED, trials=TRIALS)


@pytest.fixture(scope="module")
def fig_graph(fig_spec):
    return resolve_graph(fig_spec)


def test_quadform_law_matches_simulation():
    rng = np.random.default_rng(SEED)
    n_samples, chunk, deciles = 10**6, 10**5, np.arange(1, 10) / 10
    worst = 0.0
    for cfg in range(50):
        N = int(rng.integers(3, 21))
        sg = build_spectral_graph(random_connected_graph(rng, N, rng.uniform(0.2, 0.6)))
        M = int(rng.choice([1, 2, 3, 5]))
        ha = tabulated(sg, rng.normal(size=N))
        hb_vals = rng.uniform(0.2, 2.0, N) * (rng.random(N) > 0.2)
        hb_vals[int(rng.integers(N))] = 1.0
        hb = tabulated(sg, hb_vals)
        law = law_from_filters(ha, hb, M)
        A, B = sg.spectral_matrix(ha.response), sg.spectral_matrix(hb.response)
        crng = trial_rng(SEED, 0, cfg)
        q = np.empty(n_samples)
        for start in range(0, n_samples, chunk):
            X = crng.standard_normal((chunk, M, N)) @ B
            q[start:start + chunk] = np.einsum("tmn,tmn->t", X @ A, X)
        q.sort()
        for x in np.quantile(q, deciles):
            emp = np.searchsorted(q, x, side="right") / n_samples
            worst = max(worst, abs(quadform_cdf(law, x) - emp))
    passed = worst <= 0.005
    record(1, passed, f"max |analytic - empirical| CDF over 50 configs x 9 deciles = {worst:.4g} (tol 0.005)")
    assert passed


def test_semi_calibration_honesty():
    rng = np.random.default_rng(SEED + 2)
    targets, Ms, trials = (0.001, 0.01, 0.05), (1, 5, 30), 10_000
    misses, worst = [], 0.0
    for gi in range(20):
        N = int(rng.integers(5, 51))
        sg = build_spectral_graph(random_connected_graph(rng, N, rng.uniform(0.1, 0.5)))
        det = make_detector("semi", sg)
        S = _sqrt_pinv_matrix(sg)
        for M in Ms:
            X = trial_rng(SEED, 3, gi * 100 + M).standard_normal((trials, M, N)) @ S
            stats = det.statistics(X)
            for pfa in targets:
                emp = float(np.mean(stats > det.analytic_threshold(M, pfa)))
                z = (emp - pfa) / _se(pfa, trials)
                worst = max(worst, abs(z))
                if abs(z) > 2:
                    misses.append((N, M, pfa, emp))
    checks = 20 * len(Ms) * len(targets)
    expected = checks * 2 * (1 - 0.9772498680518208)
    passed = not misses
    record(2, passed, f"{len(misses)}/{checks} cells outside 2 s.e. (about {expected:.1f} expected by chance "
                      f"for a calibrated detector); max |z| = {worst:.2f}")
    assert passed, misses


def test_tikhonov_roc_reproduction(fig_spec, fig_graph):
    curves = roc_curves(fig_spec, ["semi", "tv", "lrt-tikhonov"], spectrum=fig_graph)
    a_semi, a_tv, a_lrt = (curves[k].auc for k in ("semi", "tv", "lrt-tikhonov"))
    r = smoothness_ratio(make_box1_filter(fig_graph, "tikhonov", alpha=0.2), fig_graph)
    passed = a_semi >= a_tv + 0.03 and abs(a_semi - a_lrt) <= 0.02
    record(3, passed, f"AUC semi={a_semi:.4f}, tv={a_tv:.4f}, lrt={a_lrt:.4f}; need semi >= tv+0.03 and "
                      f"|semi-lrt| <= 0.02 (N={fig_graph.n_nodes}, r(h0)={r:.3f})")
    assert passed


def test_gmrf_case(fig_spec, fig_graph):
    spec = fig_spec.replace(h0={"kind": "gmrf"})
    s0, s1 = simulate_statistics(spec, ["semi", "lrt-gmrf", "lpf"], spectrum=fig_graph)
    pd = {}
    for name in ("semi", "lrt-gmrf"):
        thr = make_detector(name, fig_graph).analytic_threshold(spec.M, 0.01)
        pd[name] = float(np.mean(s1[name] > thr))
    lpf_fail = float(np.mean(s0["lpf"] > 1.0))
    passed = pd["semi"] >= 0.95 and pd["lrt-gmrf"] >= 0.95 and lpf_fail >= 0.95
    record(4, passed, f"PD@0.01 semi={pd['semi']:.4f}, lrt={pd['lrt-gmrf']:.4f} (>=0.95); "
                      f"LPF eta_hat>1 or low-band zero on {lpf_fail:.1%} of H0 trials (>=95%)")
    assert passed


def test_scaling_robustness(fig_spec, fig_graph):
    curves = scaling_experiment(fig_spec, 0.9, ["semi", "tv"])
    a_semi, a_tv = curves["semi"].auc, curves["tv"].auc
    X = trial_rng(SEED, 4, 0).standard_normal((30, fig_graph.n_nodes))
    base = semi_r_hat(X, fig_graph)
    worst = max(_rel(semi_r_hat(c * X, fig_graph), base) for c in (1e-6, 0.37, 3.0, 1e5))
    r = smoothness_ratio(make_box1_filter(fig_graph, "tikhonov", alpha=0.2), fig_graph)
    passed = a_tv < 0.5 and a_semi > 0.9 and worst <= 1e-12
    record(5, passed, f"AUC tv={a_tv:.4f} (<0.5), semi={a_semi:.4f} (>0.9), scale invariance rel err {worst:.2g}; "
                      f"E[TV] ratio H0/H1 = r(h0)/0.81 = {r / 0.81:.3f}")
    assert passed


def test_monotone_sweeps(fig_spec, fig_graph):
    trials, pfa = 5_000, 0.001
    spec = fig_spec.replace(trials=trials)
    by_M = pd_sweep(spec.replace(sweep={"parameter": "M", "grid": [5, 10, 30, 100]}), ["semi"], pfa)
    by_r = pd_sweep(spec.replace(sweep={"parameter": "r", "grid": [0.3, 0.5, 0.7, 0.9]}), ["semi"], pfa)
    pd_M = [row["pd"] for row in by_M]
    pd_r = [row["pd"] for row in by_r]

    def slack(a, b):
        return 2 * math.sqrt(_se(a, trials) ** 2 + _se(b, trials) ** 2)

    up = all(b >= a - slack(a, b) for a, b in zip(pd_M, pd_M[1:]))
    down = all(b <= a + slack(a, b) for a, b in zip(pd_r, pd_r[1:]))
    inv = max(abs(smoothness_ratio(make_box1_filter(fig_graph, "tikhonov", alpha=alpha_for_ratio(fig_graph, r)),
                                   fig_graph) - r) for r in (0.3, 0.5, 0.7, 0.9))
    passed = up and down and inv <= 1e-8
    record(6, passed, f"PD over M {np.round(pd_M, 4).tolist()}, over r {np.round(pd_r, 4).tolist()}; "
                      f"ratio inversion error {inv:.2g}")
    assert passed


def test_identity_suites():
    rng = np.random.default_rng(SEED + 7)
    worst = dict.fromkeys(("tv", "lrt", "rhat", "ml", "poly"), 0.0)
    kinds = [("gmrf", {}), ("tikhonov", {"alpha": 0.4}), ("diffusion", {"tau": 0.3})]
    for i in range(100):
        g = random_connected_graph(rng, int(rng.integers(3, 21)), rng.uniform(0.2, 0.7))
        sg = build_spectral_graph(g)
        N, M = g.n_nodes, int(rng.integers(1, 8))
        X = rng.normal(size=(M, N))
        xt = gft(sg, X)

        x = X[0]
        spectral = float(sg.eigenvalues @ gft(sg, x) ** 2)
        worst["tv"] = max(worst["tv"], _rel(total_variation(sg, x), total_variation_edges(g, x)),
                          _rel(total_variation(sg, x), spectral))

        k0, p0 = kinds[i % 3]
        h0 = make_box1_filter(sg, k0, **{k: v * rng.uniform(0.5, 2) for k, v in p0.items()})
        h1 = allpass(sg) if i % 2 else make_box1_filter(sg, "tikhonov", alpha=rng.uniform(0.1, 3))
        s2 = rng.uniform(0.5, 2.0)
        forms = [lrt_statistic(X, sg, h0, h1, s2, form=f) for f in ("spectral", "trace", "frobenius")]
        worst["lrt"] = max(worst["lrt"], _rel(forms[0], forms[1]), _rel(forms[0], forms[2]))

        worst["rhat"] = max(worst["rhat"], _rel(semi_r_hat(X, sg), semi_r_hat(X, sg, form="spectral")))

        assert all(len(grp) == 1 for grp in sg.groups)
        est = ml_filter_estimate(X, sg).scaled_response_sq
        worst["ml"] = max(worst["ml"], float(np.max(np.abs(est - np.mean(xt**2, axis=0)) / np.max(est))))

        coeffs = rng.normal(size=int(rng.integers(1, 5)))
        p_lam = np.polyval(coeffs[::-1], sg.eigenvalues)
        worst["poly"] = max(worst["poly"], _rel(quadform_polynomial(sg.laplacian, coeffs, X), float(np.sum(xt**2 @ p_lam))))
    passed = max(worst.values()) <= 1e-9
    record(7, passed, "max relative error " + ", ".join(f"{k}={v:.2g}" for k, v in worst.items()) + " (tol 1e-9)")
    assert passed


def test_smooth_filter_fuzz():
    rng = np.random.default_rng(SEED + 8)
    r_mono, r_claim = [], []
    for _ in range(1000):
        sg = build_spectral_graph(random_connected_graph(rng, int(rng.integers(3, 26)), rng.uniform(0.1, 0.8)))
        N = sg.n_nodes
        # continuous values or a few repeated levels, sorted non-increasing
        if rng.random() < 0.5:
            vals = rng.uniform(0, 3, N)
        else:
            vals = rng.integers(0, 4, N).astype(float)
        vals = np.sort(vals)[::-1]
        if vals[0] == vals[-1]:
            vals[0] += 1.0
        r_mono.append(smoothness_ratio(SpectralFilter(vals.copy()), sg))

    for _ in range(1000):
        sg = build_spectral_graph(random_connected_graph(rng, int(rng.integers(3, 26)), rng.uniform(0.1, 0.8)))
        N = sg.n_nodes
        J = claim1_check(sg, SpectralFilter(np.ones(N)), 1).J
        K = int(rng.integers(1, J + 1))
        bound = claim1_check(sg, SpectralFilter(np.ones(N)), K).bound
        h = np.empty(N)
        h[:K] = rng.uniform(1, 2, K)
        h[K:] = rng.uniform(0, 0.999 * math.sqrt(bound) * h[:K].min(), N - K)
        filt = SpectralFilter(h * rng.choice([-1.0, 1.0], N))
        assert claim1_check(sg, filt, K).is_lpf_smooth
        r_claim.append(smoothness_ratio(filt, sg))
    passed = max(r_mono) < 1 and max(r_claim) < 1
    record(8, passed, f"max r over 1000 non-increasing filters = {max(r_mono):.6f}; "
                      f"over 1000 LPF-condition filters = {max(r_claim):.6f} (need < 1)")
    assert passed


def test_mean_absorption_trace_identity():
    rng = np.random.default_rng(SEED + 9)
    worst = 0.0
    for _ in range(50):
        sg = build_spectral_graph(random_connected_graph(rng, int(rng.integers(3, 21)), rng.uniform(0.2, 0.7)))
        h = make_box1_filter(sg, "tikhonov", alpha=rng.uniform(0.1, 2))
        mu = rng.normal() * 3 * sg.eigenvectors[:, int(rng.integers(sg.n_nodes))]
        s2 = rng.uniform(0.3, 2)
        worst = max(worst, _rel(expected_tv(sg, h, s2, mu), expected_tv(sg, absorb_mean(sg, h, mu, s2), s2)))

    # Monte Carlo on one instance
    sg = build_spectral_graph(random_connected_graph(np.random.default_rng(SEED), 12, 0.4))
    h = make_box1_filter(sg, "gmrf")
    mu, s2, n = 2.0 * sg.eigenvectors[:, 3], 0.8, 10**5
    X = mu + math.sqrt(s2) * trial_rng(SEED, 4, 9).standard_normal((n, 12)) @ sg.spectral_matrix(h.response)
    tv = np.einsum("tn,nk,tk->t", X, sg.laplacian, X)
    target = expected_tv(sg, absorb_mean(sg, h, mu, s2), s2)
    z = (tv.mean() - target) / (tv.std(ddof=1) / math.sqrt(n))
    passed = worst <= 1e-10 and abs(z) <= 3
    record(9, passed, f"analytic rel err {worst:.2g} (tol 1e-10); Monte Carlo mean TV z = {z:.2f} (|z| <= 3)")
    assert passed


def test_performance_envelope():
    rng = np.random.default_rng(SEED)
    N, M = 1000, 100
    W = np.triu(rng.uniform(0.1, 1.0, (N, N)) * (rng.random((N, N)) < 0.05), k=1)
    W[np.arange(N - 1), np.arange(1, N)] = 1.0
    W = W + W.T
    L = np.diag(W.sum(axis=1)) - W
    X = rng.normal(size=(M, N))
    t0 = time.perf_counter()
    semi_r_hat(X, L)
    t_semi = time.perf_counter() - t0
    g = WeightedGraph.from_adjacency(W)
    t0 = time.perf_counter()
    build_spectral_graph(g)
    t_evd = time.perf_counter() - t0
    passed = t_semi < 10 and t_evd < 100
    record(10, passed, f"semi statistic N={N}, M={M}: {t_semi:.3f} s (< 10 s); "
                       f"spectral preprocessing: {t_evd:.2f} s (< 100 s)")
    assert passed
