"""Synthetic graphs and signals, and Monte Carlo ROC / detection-probability experiments.

Every trial draws from its own counter-based random stream, keyed by the
experiment seed and a stream tag and positioned by the trial index. Results
are therefore identical however the trials are split across workers.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist, squareform

from .detectors import Detector, make_detector
from .exceptions import DisconnectedAfterCutoff, InvalidParameter
from .filters import SpectralFilter, filter_from_config, filter_matrix, make_box1_filter, smoothness_ratio
from .graph import SignalBatch, SpectralGraph, WeightedGraph, build_spectral_graph

CHUNK = 500

# stream tags
STREAM_COORDS = 0
STREAM_H0 = 1
STREAM_H1 = 2
STREAM_CALIB = 3
STREAM_SINGLE = 4

_MASK64 = (1 << 64) - 1


def trial_rng(seed: int, stream: int = 0, trial: int = 0) -> np.random.Generator:
    """Generator for one trial of one stream, independent of all others."""
    bitgen = np.random.Philox(key=(int(seed) & _MASK64) | (int(stream) << 64),
                              counter=np.array([0, 0, 0, int(trial)], dtype=np.uint64))
    return np.random.Generator(bitgen)


# ---------------------------------------------------------------------------
# graphs and data


def sample_coords(n: int, seed: int) -> np.ndarray:
    """``n`` uniform points in the unit square, shape ``(n, 2)``."""
    if n < 2:
        raise InvalidParameter("need at least two points")
    return trial_rng(seed, STREAM_COORDS).random((n, 2))


def rbf_graph(coords, kernel_sigma: float, cutoff: float) -> WeightedGraph:
    """Gaussian-kernel proximity graph.

    Weights are ``exp(-d^2 / (2 kernel_sigma^2))``; pairs whose weight falls
    below ``cutoff`` get no edge.

    Raises
    ------
    DisconnectedAfterCutoff
        If the surviving edges do not connect all points.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] < 2:
        raise InvalidParameter("need at least two points")
    if not kernel_sigma > 0:
        raise InvalidParameter("kernel_sigma must be positive")
    d2 = squareform(pdist(coords, "sqeuclidean"))
    W = np.exp(-d2 / (2 * kernel_sigma**2))
    np.fill_diagonal(W, 0.0)
    W[W < cutoff] = 0.0
    g = WeightedGraph.from_adjacency(W)
    if not _connected(W):
        raise DisconnectedAfterCutoff(f"cutoff {cutoff} leaves the graph disconnected")
    return g


def _connected(W) -> bool:
    from scipy.sparse.csgraph import connected_components

    return connected_components(W > 0, directed=False)[0] == 1


def _filter_operator(spectrum: SpectralGraph, filt: SpectralFilter, sigma2: float) -> np.ndarray:
    return np.sqrt(sigma2) * filter_matrix(filt, spectrum)


def _draw(H, M, noise_std, rng):
    y = rng.standard_normal((M, H.shape[0]))
    x = y @ H
    if noise_std > 0:
        x = x + noise_std * rng.standard_normal(x.shape)
    return x


def generate_batch(spectrum: SpectralGraph, filt: SpectralFilter, sigma2: float, M: int,
                   noise_std: float, seed: int) -> SignalBatch:
    """``M`` samples of ``h(L) y + n`` with ``y ~ N(0, sigma2 I)`` and ``n ~ N(0, noise_std^2 I)``."""
    if M < 1:
        raise InvalidParameter("M must be at least 1")
    H = _filter_operator(spectrum, filt, sigma2)
    return SignalBatch(_draw(H, M, noise_std, trial_rng(seed, STREAM_SINGLE)), spectrum)


def simulate_batches(H, M, noise_std, seed, stream, start, stop) -> np.ndarray:
    """Stack of trial batches ``start..stop-1``, shape ``(stop - start, M, N)``."""
    out = np.empty((stop - start, M, H.shape[0]))
    for i, t in enumerate(range(start, stop)):
        out[i] = _draw(H, M, noise_std, trial_rng(seed, stream, t))
    return out


# ---------------------------------------------------------------------------
# experiment description


@dataclass(frozen=True)
class ExperimentSpec:
    """One synthetic experiment.

    ``graph`` is either a :class:`WeightedGraph` or RBF parameters
    ``{"n", "kernel_sigma", "cutoff"}``; in the latter case the coordinates
    are drawn once from ``seed``. Filters are config dicts as accepted by
    :func:`graphsmooth.filters.filter_from_config`.
    """

    graph: Any = field(default_factory=lambda: {"n": 30, "kernel_sigma": 0.5, "cutoff": 0.55})
    h0: dict = field(default_factory=lambda: {"kind": "tikhonov", "params": {"alpha": 0.2}})
    h1: dict = field(default_factory=lambda: {"kind": "allpass"})
    M: int = 30
    noise_std: float = 0.1
    trials: int = 10_000
    seed: int = 0
    sigma2: float = 1.0
    h1_scale: float = 1.0
    sweep: dict | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameter("trials must be at least 1")
        if self.noise_std < 0:
            raise InvalidParameter("noise_std must be non-negative")
        if self.M < 1:
            raise InvalidParameter("M must be at least 1")
        if self.sweep is not None:
            grid = np.asarray(self.sweep["grid"], dtype=float)
            if grid.size and np.any(np.diff(grid) <= 0):
                raise InvalidParameter("sweep grid must be strictly increasing")

    def replace(self, **kw) -> ExperimentSpec:
        return dataclasses.replace(self, **kw)


def resolve_graph(spec: ExperimentSpec) -> SpectralGraph:
    g = spec.graph
    if isinstance(g, SpectralGraph):
        return g
    if isinstance(g, dict):
        coords = sample_coords(int(g["n"]), spec.seed)
        g = rbf_graph(coords, float(g["kernel_sigma"]), float(g["cutoff"]))
    if not isinstance(g, WeightedGraph):
        raise InvalidParameter("graph must be a WeightedGraph, SpectralGraph or RBF parameter dict")
    return build_spectral_graph(g)


@dataclass
class RocCurve:
    """Empirical ROC: ``points`` are ``(threshold, pfa, pd)`` rows sorted by threshold."""

    points: np.ndarray
    trials: int
    auc: float
    seed: int | None = None

    @property
    def thresholds(self):
        return self.points[:, 0]

    @property
    def pfa(self):
        return self.points[:, 1]

    @property
    def pd(self):
        return self.points[:, 2]

    def pd_at(self, pfa: float) -> float:
        """Largest detection rate among operating points with false-alarm rate at most ``pfa``."""
        ok = self.pfa <= pfa + 1e-15
        return float(self.pd[ok].max()) if ok.any() else 0.0


def roc_from_statistics(s0, s1, seed=None) -> RocCurve:
    """ROC over every pooled statistic value, with decisions ``stat > threshold``."""
    s0 = np.sort(np.asarray(s0, dtype=float))
    s1 = np.sort(np.asarray(s1, dtype=float))
    thr = np.concatenate([[-np.inf], np.unique(np.concatenate([s0, s1]))])
    pfa = (s0.size - np.searchsorted(s0, thr, side="right")) / s0.size
    pd = (s1.size - np.searchsorted(s1, thr, side="right")) / s1.size
    # pfa is non-increasing along thr; integrate pd over ascending pfa
    auc = float(np.trapezoid(pd[::-1], pfa[::-1]))
    return RocCurve(np.column_stack([thr, pfa, pd]), int(min(s0.size, s1.size)), auc, seed)


# ---------------------------------------------------------------------------
# Monte Carlo engine


def _run_statistics(H, M, noise_std, seed, stream, trials, detectors: Sequence[Detector],
                    n_jobs: int = 1) -> dict:
    chunks = [(a, min(a + CHUNK, trials)) for a in range(0, trials, CHUNK)]

    def work(bounds):
        X = simulate_batches(H, M, noise_std, seed, stream, *bounds)
        return [np.asarray(d.statistics(X), dtype=float) for d in detectors]

    if n_jobs == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(work, chunks))
    return {d.name: np.concatenate([p[i] for p in parts]) for i, d in enumerate(detectors)}


def _filters(spec: ExperimentSpec, spectrum):
    h0 = filter_from_config(spectrum, spec.h0)
    h1 = filter_from_config(spectrum, spec.h1)
    if spec.h1_scale != 1.0:
        h1 = h1.scaled(spec.h1_scale)
    return h0, h1


def _detectors(configs, spectrum):
    if isinstance(configs, (str, dict)):
        configs = [configs]
    return [make_detector(c, spectrum) for c in configs]


def simulate_statistics(spec: ExperimentSpec, detector_configs, n_jobs: int = 1,
                        spectrum: SpectralGraph | None = None) -> tuple[dict, dict]:
    """Per-trial statistics under both hypotheses: ``(stats_h0, stats_h1)`` keyed by detector name."""
    spectrum = spectrum or resolve_graph(spec)
    dets = _detectors(detector_configs, spectrum)
    h0, h1 = _filters(spec, spectrum)
    out = []
    for filt, stream in ((h0, STREAM_H0), (h1, STREAM_H1)):
        H = _filter_operator(spectrum, filt, spec.sigma2)
        out.append(_run_statistics(H, spec.M, spec.noise_std, spec.seed, stream, spec.trials, dets, n_jobs))
    return out[0], out[1]


def roc_curves(spec: ExperimentSpec, detector_configs, n_jobs: int = 1,
               spectrum: SpectralGraph | None = None) -> dict[str, RocCurve]:
    """ROC curves for several detectors evaluated on the same simulated trials."""
    s0, s1 = simulate_statistics(spec, detector_configs, n_jobs, spectrum)
    return {name: roc_from_statistics(s0[name], s1[name], spec.seed) for name in s0}


def roc_curve(spec: ExperimentSpec, detector_config, n_jobs: int = 1,
              spectrum: SpectralGraph | None = None) -> RocCurve:
    curves = roc_curves(spec, [detector_config], n_jobs, spectrum)
    return next(iter(curves.values()))


def scaling_experiment(spec: ExperimentSpec, scale: float, detector_configs=("semi", "tv"),
                       n_jobs: int = 1) -> dict[str, RocCurve]:
    """ROC curves with the H1 filter multiplied by ``scale`` before generation."""
    if not scale > 0:
        raise InvalidParameter("scale must be positive")
    return roc_curves(spec.replace(h1_scale=spec.h1_scale * scale), detector_configs, n_jobs)


def empirical_threshold(h0_statistics, target_pfa: float) -> float:
    """Smallest pooled value whose strict exceedance rate is at most ``target_pfa``."""
    s = np.sort(np.asarray(h0_statistics, dtype=float))
    k = int(np.ceil(s.size * (1.0 - target_pfa) - 1e-9))
    return float(s[min(max(k, 1), s.size) - 1])


def alpha_for_ratio(spectrum: SpectralGraph, r: float, tol: float = 1e-8) -> float:
    """Tikhonov ``alpha`` whose smoothness ratio equals ``r`` (``0 < r < 1``).

    The ratio decreases monotonically from 1 at ``alpha = 0``, so a bracketed
    root search in ``log(alpha)`` suffices.
    """
    if not 0 < r < 1:
        raise InvalidParameter("target ratio must lie in (0, 1)")

    def f(log_a):
        return smoothness_ratio(make_box1_filter(spectrum, "tikhonov", False, alpha=np.exp(log_a)), spectrum) - r

    lo, hi = -30.0, 30.0
    if f(lo) < 0 or f(hi) > 0:
        raise InvalidParameter(f"ratio {r} not reachable with a Tikhonov filter on this graph")
    log_a = brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    alpha = float(np.exp(log_a))
    err = abs(f(log_a))
    if err > tol:
        raise ArithmeticError(f"ratio inversion missed by {err:.3g}")
    return alpha


def _sweep_point_spec(spec: ExperimentSpec, param: str, value, spectrum):
    if param == "M":
        return spec.replace(M=int(value))
    if param == "alpha":
        return spec.replace(h0={"kind": "tikhonov", "params": {"alpha": float(value)}})
    if param == "r":
        return spec.replace(h0={"kind": "tikhonov", "params": {"alpha": alpha_for_ratio(spectrum, float(value))}})
    if param == "scale":
        return spec.replace(h1_scale=float(value))
    raise InvalidParameter(f"unknown sweep parameter {param!r}")


def _point_detectors(configs, point: ExperimentSpec, param: str):
    """Matched LRT variants follow the swept H0 filter."""
    out = []
    for c in configs:
        c = {"name": c} if isinstance(c, str) else dict(c)
        if param in ("alpha", "r") and c["name"] == "lrt-tikhonov":
            c["alpha"] = point.h0["params"]["alpha"]
        out.append(c)
    return out


def pd_sweep(spec: ExperimentSpec, detector_configs, target_pfa: float, threshold_mode: str = "auto",
             calib_factor: int = 10, n_jobs: int = 1) -> list[dict]:
    """Detection probability at a fixed false-alarm level over a parameter grid.

    ``spec.sweep = {"parameter": "M" | "alpha" | "r" | "scale", "grid": [...]}``.
    Thresholds are analytic for detectors that have a false-alarm law when
    ``threshold_mode="analytic"``; detectors without one (``tv``, ``lpf``) and
    ``threshold_mode="empirical"`` use the empirical quantile of an H0 run with
    ``calib_factor`` times as many trials. ``"auto"`` is analytic for ``M`` and
    ``scale`` sweeps and empirical for ``alpha`` and ``r`` sweeps, where the
    null hypothesis itself changes along the grid.

    Returns rows ``{"param", "value", "detector", "pd", "threshold", "trials"}``.
    """
    if spec.sweep is None:
        raise InvalidParameter("spec has no sweep")
    param = spec.sweep["parameter"]
    if threshold_mode == "auto":
        threshold_mode = "empirical" if param in ("alpha", "r") else "analytic"
    if threshold_mode not in ("analytic", "empirical"):
        raise InvalidParameter(f"unknown threshold mode {threshold_mode!r}")
    spectrum = resolve_graph(spec)
    rows = []
    for value in spec.sweep["grid"]:
        point = _sweep_point_spec(spec, param, value, spectrum)
        dets = _detectors(_point_detectors(detector_configs, point, param), spectrum)
        h0, h1 = _filters(point, spectrum)
        H1 = _filter_operator(spectrum, h1, point.sigma2)
        s1 = _run_statistics(H1, point.M, point.noise_std, point.seed, STREAM_H1, point.trials, dets, n_jobs)
        needs_calib = [d for d in dets if threshold_mode == "empirical" or not d.calibratable]
        calib = {}
        if needs_calib:
            H0 = _filter_operator(spectrum, h0, point.sigma2)
            calib = _run_statistics(H0, point.M, point.noise_std, point.seed, STREAM_CALIB,
                                    calib_factor * point.trials, needs_calib, n_jobs)
        for d in dets:
            if d.name in calib:
                thr = empirical_threshold(calib[d.name], target_pfa)
            else:
                thr = d.analytic_threshold(point.M, target_pfa)
            pd = float(np.mean(s1[d.name] > thr))
            rows.append({"param": param, "value": value, "detector": d.name, "pd": pd,
                         "threshold": thr, "trials": point.trials})
    return rows


def empirical_pfa(spectrum: SpectralGraph, detector: Detector, threshold: float, M: int, trials: int,
                  seed: int, filt: SpectralFilter | None = None, sigma2: float = 1.0,
                  noise_std: float = 0.0, n_jobs: int = 1) -> float:
    """Exceedance rate of ``detector`` under ``filt`` (default: the ``L^+`` null of the semi detector)."""
    if filt is None:
        H = np.sqrt(sigma2) * spectrum.spectral_matrix(_sqrt_pinv(spectrum.eigenvalues))
    else:
        H = _filter_operator(spectrum, filt, sigma2)
    s = _run_statistics(H, M, noise_std, seed, STREAM_CALIB, trials, [detector], n_jobs)[detector.name]
    return float(np.mean(s > threshold))


def _sqrt_pinv(lam):
    out = np.zeros_like(lam)
    out[1:] = 1.0 / np.sqrt(lam[1:])
    return out
