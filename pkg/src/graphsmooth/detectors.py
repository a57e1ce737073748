"""Smoothness detectors: LRT, semi-parametric ratio test, and the TV / LPF baselines."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .exceptions import (
    DimensionMismatch,
    EmptyBatch,
    InvalidOrder,
    InvalidParameter,
    NonPositiveSigma,
    ZeroSignal,
)
from .filters import (
    SpectralFilter,
    _pinv_sq,
    filter_from_config,
    make_box1_filter,
    allpass,
    quadform_polynomial,
)
from .graph import SpectralGraph, as_values, eigenvalue_groups
from . import quadform

TOL_NORM = 1e-6
TOL_SUPPORT_REL = 1e-12

H0 = "H0"
H1 = "H1"


class UnequalFilterNorms(UserWarning):
    """The two LRT hypotheses have filters of different energy."""


def decide(statistic: float, threshold: float) -> str:
    """``H1`` iff ``statistic > threshold``; ties go to ``H0``."""
    return H1 if statistic > threshold else H0


@dataclass
class DetectionReport:
    detector: str
    statistic: float
    threshold: float
    decision: str
    target_pfa: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.decision != decide(self.statistic, self.threshold):
            raise ValueError("decision inconsistent with statistic and threshold")

    @property
    def smooth(self) -> bool:
        return self.decision == H0

    def to_dict(self) -> dict[str, Any]:
        out = {
            "detector": self.detector,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "decision": self.decision,
            "verdict": "smooth" if self.smooth else "not smooth",
        }
        if self.target_pfa is not None:
            out["target_pfa"] = self.target_pfa
        out["meta"] = self.meta
        return out


@dataclass(frozen=True, eq=False)
class MLFilterEstimate:
    """Estimated ``sigma^2 h^2(lambda_n)`` with eigenvalue groups and support."""

    scaled_response_sq: np.ndarray
    support: np.ndarray
    groups: list

    @property
    def amplitude(self) -> np.ndarray:
        """Estimated ``|sigma h(lambda_n)|``."""
        return np.sqrt(self.scaled_response_sq)


# ---------------------------------------------------------------------------
# helpers shared by the scalar and batched paths


def _values(X, n=None):
    Xv = as_values(X)
    if Xv.shape[-2] == 0:
        raise EmptyBatch("batch has no samples")
    if n is not None and Xv.shape[-1] != n:
        raise DimensionMismatch(f"signals have {Xv.shape[-1]} entries, graph has {n} nodes")
    return Xv


def _laplacian(spectrum):
    if isinstance(spectrum, SpectralGraph):
        return spectrum.laplacian
    L = np.asarray(spectrum, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch("expected a SpectralGraph or a square Laplacian")
    return L


def _tv_sums(X, L):
    return np.einsum("...mn,...mn->...", X @ L, X)


def _energy_sums(X):
    return np.einsum("...mn,...mn->...", X, X)


def _frequency_energy(X, spectrum):
    """``sum_m xt_n[m]^2`` for every frequency ``n``."""
    Xt = X @ spectrum.eigenvectors
    return np.einsum("...mn,...mn->...n", Xt, Xt)


def _check_sigma(sigma2):
    if not sigma2 > 0:
        raise NonPositiveSigma(f"sigma2 must be positive, got {sigma2!r}")


# ---------------------------------------------------------------------------
# statistics


def sample_covariance(X) -> np.ndarray:
    """``(1/M) sum_m x_m x_m^T`` without mean removal."""
    Xv = _values(X)
    return Xv.T @ Xv / Xv.shape[0]


def lrt_weights_vector(h0: SpectralFilter, h1: SpectralFilter) -> np.ndarray:
    """Per-frequency LRT weights ``(h0^2)^+ - (h1^2)^+``."""
    return _pinv_sq(h0.response) - _pinv_sq(h1.response)


def _check_norms(h0, h1):
    e0, e1 = h0.energy, h1.energy
    if abs(e0 - e1) > TOL_NORM * max(e0, e1):
        msg = f"filter energies differ ({e0:.6g} vs {e1:.6g}); the LRT also reacts to scale"
        warnings.warn(msg, UnequalFilterNorms, stacklevel=3)
        return msg
    return None


def lrt_statistic(X, spectrum: SpectralGraph, h0: SpectralFilter, h1: SpectralFilter,
                  sigma2: float, form: str = "spectral") -> float:
    """Log-likelihood ratio of ``H1: x ~ N(0, s^2 h1^2)`` against ``H0: x ~ N(0, s^2 h0^2)``.

    ``form`` selects one of three algebraically equal evaluations:
    ``"trace"`` (``M/(2 s^2) Tr(S ((h0^2)^+ - (h1^2)^+))``), ``"frobenius"``
    (difference of ``||S^{1/2} h_i^+||_F^2``) and ``"spectral"`` (weighted sum
    of squared GFT coefficients). Warns with :class:`UnequalFilterNorms` when
    the filter energies differ.
    """
    _check_sigma(sigma2)
    Xv = _values(X, spectrum.n_nodes)
    _check_norms(h0, h1)
    M = Xv.shape[0]
    if form == "spectral":
        d = lrt_weights_vector(h0, h1)
        return float(_frequency_energy(Xv, spectrum) @ d / (2 * sigma2))
    if form == "trace":
        S = sample_covariance(Xv)
        A = spectrum.spectral_matrix(_pinv_sq(h0.response)) - spectrum.spectral_matrix(_pinv_sq(h1.response))
        return float(M / (2 * sigma2) * np.trace(S @ A))
    if form == "frobenius":
        S = sample_covariance(Xv)
        ev, U = np.linalg.eigh(S)
        S_half = (U * np.sqrt(np.clip(ev, 0, None))) @ U.T
        terms = []
        for h in (h0, h1):
            a = np.abs(h.response)
            pinv = np.zeros_like(a)
            nz = a > 1e-10 * a.max()
            pinv[nz] = 1.0 / h.response[nz]
            terms.append(np.linalg.norm(S_half @ spectrum.spectral_matrix(pinv), "fro") ** 2)
        return float(M / (2 * sigma2) * (terms[0] - terms[1]))
    raise InvalidParameter(f"unknown form {form!r}")


def box1_lrt_filters(spectrum: SpectralGraph, kind: str, alpha=None, tau=None):
    """Normalized smooth filter of the given kind against the all-pass alternative."""
    return make_box1_filter(spectrum, kind, True, alpha=alpha, tau=tau), allpass(spectrum)


def lrt_box1(X, spectrum: SpectralGraph, kind: str, sigma2: float, *, alpha=None, tau=None,
             path: str = "auto") -> float:
    """LRT for a normalized standard smooth filter against white data.

    For ``gmrf`` and ``tikhonov`` the default path evaluates
    ``sum_m x_m^T ((h0^2)^+ - I) x_m`` as a Laplacian polynomial through
    repeated products with ``L``; ``diffusion`` (and ``path="spectral"``)
    uses the spectral weights.
    """
    _check_sigma(sigma2)
    h0, h1 = box1_lrt_filters(spectrum, kind, alpha, tau)
    if path == "spectral" or (path == "auto" and kind == "diffusion"):
        return lrt_statistic(X, spectrum, h0, h1, sigma2)
    if path not in ("auto", "polynomial"):
        raise InvalidParameter(f"unknown path {path!r}")
    inv_b2 = 1.0 / h0.beta**2
    if kind == "gmrf":
        coeffs = [-1.0, inv_b2]
    elif kind == "tikhonov":
        a = h0.params["alpha"]
        coeffs = [inv_b2 - 1.0, 2 * a * inv_b2, a * a * inv_b2]
    else:
        raise InvalidParameter(f"{kind} has no finite polynomial form")
    Xv = _values(X, spectrum.n_nodes)
    return quadform_polynomial(spectrum.laplacian, coeffs, Xv) / (2 * sigma2)


def ml_filter_estimate(X, spectrum: SpectralGraph, tol_group=None, tol_support=None) -> MLFilterEstimate:
    """Constrained ML estimate of ``sigma^2 h^2(lambda_n)``.

    Each entry is the per-frequency sample energy ``(1/M) sum_m xt_n[m]^2``,
    averaged over groups of equal eigenvalues. Groups whose estimate does not
    exceed ``tol_support`` (default ``1e-12`` times the mean square of the
    batch) are outside the support and set to zero.
    """
    Xv = _values(X, spectrum.n_nodes)
    c = _frequency_energy(Xv, spectrum) / Xv.shape[0]
    groups = spectrum.groups if tol_group is None else eigenvalue_groups(spectrum.eigenvalues, tol_group)
    est = c.copy()
    for g in groups:
        if len(g) > 1:
            est[g] = c[g].mean()
    if tol_support is None:
        tol_support = TOL_SUPPORT_REL * float(np.mean(Xv**2))
    supp = est > tol_support
    est[~supp] = 0.0
    return MLFilterEstimate(est, supp, groups)


def semi_r_hat(X, spectrum, form: str = "vertex") -> float:
    """Normalized empirical TV ``sum x^T L x / (lambda_avg sum ||x||^2)``.

    ``spectrum`` may be a :class:`SpectralGraph` or a bare Laplacian; the
    vertex form never needs an eigendecomposition (``lambda_avg = Tr(L)/N``).
    ``form="spectral"`` evaluates the equivalent eigenvalue-weighted form.
    """
    if form == "spectral":
        est = ml_filter_estimate(X, spectrum)
        energy = est.scaled_response_sq.sum()
        if energy <= 0:
            raise ZeroSignal("batch has zero energy")
        return float(spectrum.eigenvalues @ est.scaled_response_sq / energy / spectrum.lambda_avg)
    L = _laplacian(spectrum)
    Xv = _values(X, L.shape[0])
    energy = _energy_sums(Xv)
    if energy <= 0:
        raise ZeroSignal("batch has zero energy")
    lam_avg = np.trace(L) / L.shape[0]
    return float(_tv_sums(Xv, L) / energy / lam_avg)


def semi_detect(X, spectrum: SpectralGraph, target_pfa: float, method: str = "imhof") -> DetectionReport:
    """Semi-parametric smoothness test at a given false-alarm level.

    Estimates the filter, computes ``r_hat``, calibrates the threshold under
    the ``N(0, sigma^2 L^+)`` null and reports ``H1`` (not smooth) when
    ``r_hat`` exceeds it.
    """
    Xv = _values(X, spectrum.n_nodes)
    M = Xv.shape[0]
    est = ml_filter_estimate(Xv, spectrum)
    energy = est.scaled_response_sq.sum()
    if energy <= 0:
        raise ZeroSignal("batch has zero energy")
    r_hat = semi_r_hat(Xv, spectrum)
    gamma_ratio = quadform.semi_threshold(spectrum, M, target_pfa, method)
    threshold = gamma_ratio / spectrum.lambda_avg
    meta = {
        "M": M,
        "N": spectrum.n_nodes,
        "lambda_avg": spectrum.lambda_avg,
        "r_hat": r_hat,
        "gamma_ratio": gamma_ratio,
        "achieved_pfa": quadform.semi_tail_prob(spectrum, M, gamma_ratio, method),
    }
    return DetectionReport("semi", r_hat, threshold, decide(r_hat, threshold), target_pfa, meta)


def naive_tv_statistic(X, spectrum) -> float:
    """Total variation summed over the batch."""
    L = _laplacian(spectrum)
    Xv = _values(X, L.shape[0])
    return float(max(_tv_sums(Xv, L), 0.0))


def _eta_from_amplitude(amp, k):
    low = amp[..., :k].min(axis=-1)
    high = amp[..., k:].max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(low > 0, high / np.where(low > 0, low, 1.0), np.inf)
    return eta


def lpf_eta_hat(X, spectrum: SpectralGraph, k: int | None = None) -> float:
    """Estimated LPF ratio from the ML amplitudes; ``inf`` when a low-band amplitude is zero."""
    k = _lpf_order(spectrum, k)
    est = ml_filter_estimate(X, spectrum)
    return float(_eta_from_amplitude(est.amplitude, k))


def _lpf_order(spectrum, k):
    N = spectrum.n_nodes
    if k is None:
        k = N // 2
    if not 1 <= k <= N - 1:
        raise InvalidOrder(f"k must lie in [1, {N - 1}], got {k}")
    return int(k)


def lpf_eta_hat_detect(X, spectrum: SpectralGraph, k: int | None = None, gamma: float = 1.0) -> DetectionReport:
    k = _lpf_order(spectrum, k)
    eta = lpf_eta_hat(X, spectrum, k)
    Xv = _values(X)
    meta = {"M": Xv.shape[0], "N": spectrum.n_nodes, "k": k, "low_band_zero": bool(np.isinf(eta))}
    return DetectionReport("lpf", eta, gamma, decide(eta, gamma), None, meta)


def lrt_detect(X, spectrum: SpectralGraph, h0: SpectralFilter, h1: SpectralFilter, sigma2: float,
               target_pfa: float | None = None, threshold: float | None = None,
               name: str = "lrt", method: str = "imhof") -> DetectionReport:
    Xv = _values(X, spectrum.n_nodes)
    M = Xv.shape[0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnequalFilterNorms)
        stat = lrt_statistic(Xv, spectrum, h0, h1, sigma2)
    meta = {"M": M, "N": spectrum.n_nodes, "lambda_avg": spectrum.lambda_avg,
            "h0": h0.describe(), "h1": h1.describe(), "sigma2": sigma2}
    if caught:
        meta["warnings"] = [str(w.message) for w in caught]
    if threshold is None:
        if target_pfa is None:
            raise InvalidParameter("give either a threshold or a target false-alarm level")
        threshold = quadform.lrt_threshold(h0, h1, M, target_pfa, method)
        meta["achieved_pfa"] = quadform.lrt_tail_prob(h0, h1, M, threshold, method)
    return DetectionReport(name, stat, float(threshold), decide(stat, threshold), target_pfa, meta)


# ---------------------------------------------------------------------------
# configurable detector objects (used by the simulation harness and the CLI)


class Detector:
    """A named statistic with an optional analytic calibration.

    ``statistics`` is vectorized over leading axes: input ``(..., M, N)``,
    output ``(...)``.
    """

    name = "detector"
    calibratable = False

    def __init__(self, spectrum: SpectralGraph):
        self.spectrum = spectrum

    def statistics(self, X) -> np.ndarray:
        raise NotImplementedError

    def statistic(self, X) -> float:
        raise NotImplementedError

    def analytic_threshold(self, M: int, target_pfa: float) -> float:
        raise NotImplementedError(f"{self.name} has no analytic false-alarm law")

    def detect(self, X, threshold=None, target_pfa=None) -> DetectionReport:
        stat = self.statistic(X)
        if threshold is None:
            if target_pfa is None:
                raise InvalidParameter("give either a threshold or a target false-alarm level")
            threshold = self.analytic_threshold(_values(X).shape[0], target_pfa)
        meta = {"M": _values(X).shape[0], "N": self.spectrum.n_nodes}
        return DetectionReport(self.name, stat, float(threshold), decide(stat, threshold), target_pfa, meta)

    def describe(self) -> dict:
        return {"name": self.name}


class LRTDetector(Detector):
    calibratable = True

    def __init__(self, spectrum, h0: SpectralFilter, h1: SpectralFilter, sigma2: float = 1.0, name="lrt"):
        super().__init__(spectrum)
        _check_sigma(sigma2)
        self.h0, self.h1, self.sigma2, self.name = h0, h1, float(sigma2), name
        self._d = lrt_weights_vector(h0, h1) / (2 * self.sigma2)

    def statistics(self, X):
        return _frequency_energy(np.asarray(X, dtype=float), self.spectrum) @ self._d

    def statistic(self, X):
        return lrt_statistic(X, self.spectrum, self.h0, self.h1, self.sigma2)

    def analytic_threshold(self, M, target_pfa):
        return quadform.lrt_threshold(self.h0, self.h1, M, target_pfa)

    def detect(self, X, threshold=None, target_pfa=None):
        return lrt_detect(X, self.spectrum, self.h0, self.h1, self.sigma2, target_pfa, threshold, self.name)

    def describe(self):
        return {"name": self.name, "h0": self.h0.describe(), "h1": self.h1.describe(), "sigma2": self.sigma2}


class SemiDetector(Detector):
    name = "semi"
    calibratable = True

    def statistics(self, X):
        X = np.asarray(X, dtype=float)
        return _tv_sums(X, self.spectrum.laplacian) / _energy_sums(X) / self.spectrum.lambda_avg

    def statistic(self, X):
        return semi_r_hat(X, self.spectrum)

    def analytic_threshold(self, M, target_pfa):
        return quadform.semi_threshold(self.spectrum, M, target_pfa) / self.spectrum.lambda_avg

    def detect(self, X, threshold=None, target_pfa=None):
        if threshold is None:
            return semi_detect(X, self.spectrum, target_pfa)
        return super().detect(X, threshold)


class TVDetector(Detector):
    name = "tv"

    def statistics(self, X):
        return _tv_sums(np.asarray(X, dtype=float), self.spectrum.laplacian)

    def statistic(self, X):
        return naive_tv_statistic(X, self.spectrum)


class LPFDetector(Detector):
    name = "lpf"

    def __init__(self, spectrum, k: int | None = None):
        super().__init__(spectrum)
        self.k = _lpf_order(spectrum, k)

    def statistics(self, X):
        X = np.asarray(X, dtype=float)
        c = _frequency_energy(X, self.spectrum) / X.shape[-2]
        for g in self.spectrum.groups:
            if len(g) > 1:
                c[..., g] = c[..., g].mean(axis=-1, keepdims=True)
        tol = TOL_SUPPORT_REL * np.mean(X**2, axis=(-2, -1))
        c = np.where(c > tol[..., None], c, 0.0)
        return _eta_from_amplitude(np.sqrt(c), self.k)

    def statistic(self, X):
        return lpf_eta_hat(X, self.spectrum, self.k)

    def detect(self, X, threshold=None, target_pfa=None):
        return lpf_eta_hat_detect(X, self.spectrum, self.k, 1.0 if threshold is None else threshold)

    def describe(self):
        return {"name": self.name, "k": self.k}


_BOX1_DEFAULTS = {"lrt-gmrf": ("gmrf", {}), "lrt-tikhonov": ("tikhonov", {"alpha": 0.2}),
                  "lrt-diffusion": ("diffusion", {"tau": 0.1})}


def make_detector(config, spectrum: SpectralGraph) -> Detector:
    """Instantiate a detector from ``{name, ...params}``.

    Names: ``lrt`` (needs ``h0``/``h1`` filter configs), ``lrt-gmrf``,
    ``lrt-tikhonov`` (``alpha``, default 0.2), ``lrt-diffusion`` (``tau``,
    default 0.1), ``semi``, ``tv``, ``lpf`` (``k``, default ``N // 2``).
    LRT variants take ``sigma2`` (default 1).
    """
    if isinstance(config, str):
        config = {"name": config}
    name = config["name"]
    sigma2 = float(config.get("sigma2", 1.0))
    if name == "lrt":
        h0 = filter_from_config(spectrum, config["h0"])
        h1 = filter_from_config(spectrum, config.get("h1", {"kind": "allpass"}))
        return LRTDetector(spectrum, h0, h1, sigma2, "lrt")
    if name in _BOX1_DEFAULTS:
        kind, defaults = _BOX1_DEFAULTS[name]
        params = {k: float(config.get(k, v)) for k, v in defaults.items()}
        h0, h1 = box1_lrt_filters(spectrum, kind, **params)
        return LRTDetector(spectrum, h0, h1, sigma2, name)
    if name == "semi":
        return SemiDetector(spectrum)
    if name == "tv":
        return TVDetector(spectrum)
    if name == "lpf":
        return LPFDetector(spectrum, config.get("k"))
    raise InvalidParameter(f"unknown detector {name!r}")
