"""Graph filters represented by their frequency response on a Laplacian spectrum."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .exceptions import (
    DimensionMismatch,
    InconsistentResponse,
    InvalidParameter,
    LowBandZero,
    MeanNotEigenvector,
    OrderTooHigh,
    ZeroFilter,
)
from .graph import SpectralGraph, as_values

TOL_SING = 1e-10
TOL_ALIGN = 1e-8
TOL_RESPONSE = 1e-10

BOX1_KINDS = ("gmrf", "tikhonov", "diffusion")


@dataclass(frozen=True, eq=False)
class SpectralFilter:
    """Frequency response ``h(lambda_n)`` aligned with an ascending spectrum.

    ``response`` already includes the normalization factor ``beta``.
    """

    response: np.ndarray
    kind: str = "tabulated"
    params: dict = field(default_factory=dict)
    beta: float = 1.0

    def __post_init__(self):
        r = np.array(self.response, dtype=float)
        if r.ndim != 1:
            raise DimensionMismatch("filter response must be one-dimensional")
        if not np.all(np.isfinite(r)):
            raise InvalidParameter("filter response must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "response", r)

    @property
    def n(self) -> int:
        return self.response.shape[0]

    @property
    def energy(self) -> float:
        """``sum_n h(lambda_n)^2``, i.e. ``Tr(h^2(L))``."""
        return float(np.sum(self.response**2))

    def scaled(self, c: float) -> SpectralFilter:
        return SpectralFilter(c * self.response, self.kind, dict(self.params), c * self.beta)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": dict(self.params), "beta": self.beta}


def _check(filt: SpectralFilter, spectrum: SpectralGraph):
    if filt.n != spectrum.n_nodes:
        raise DimensionMismatch(
            f"filter has {filt.n} coefficients but the graph has {spectrum.n_nodes} nodes"
        )


def _normalization(raw) -> float:
    energy = np.sum(raw**2)
    if energy <= 0:
        raise ZeroFilter("cannot normalize an all-zero response")
    return float(np.sqrt(raw.shape[0] / energy))


def make_box1_filter(spectrum: SpectralGraph, kind: str, normalize: bool = True, *,
                     alpha: float | None = None, tau: float | None = None) -> SpectralFilter:
    """Build one of the standard smooth filters.

    ``gmrf``: ``beta / sqrt(lambda)`` with zero at the null frequency;
    ``tikhonov``: ``beta / (1 + alpha lambda)``; ``diffusion``:
    ``beta exp(-tau lambda)``. With ``normalize`` the factor ``beta`` makes
    ``sum h^2 = N``; otherwise ``beta = 1``.
    """
    lam = spectrum.eigenvalues
    params = {}
    if kind == "gmrf":
        raw = np.zeros_like(lam)
        nz = lam > spectrum.tol_group
        raw[nz] = 1.0 / np.sqrt(lam[nz])
    elif kind == "tikhonov":
        if alpha is None or not alpha > 0:
            raise InvalidParameter(f"tikhonov filter needs alpha > 0, got {alpha!r}")
        raw = 1.0 / (1.0 + alpha * lam)
        params["alpha"] = float(alpha)
    elif kind == "diffusion":
        if tau is None or not tau > 0:
            raise InvalidParameter(f"diffusion filter needs tau > 0, got {tau!r}")
        raw = np.exp(-tau * lam)
        params["tau"] = float(tau)
    else:
        raise InvalidParameter(f"unknown smooth filter kind {kind!r}")
    beta = _normalization(raw) if normalize else 1.0
    return SpectralFilter(beta * raw, kind, params, beta)


def allpass(spectrum: SpectralGraph, scale: float = 1.0) -> SpectralFilter:
    return SpectralFilter(np.full(spectrum.n_nodes, float(scale)), "allpass", {}, float(scale))


def tabulated(spectrum: SpectralGraph, values, normalize: bool = False, tol=TOL_RESPONSE) -> SpectralFilter:
    """Filter with explicitly given response values.

    Raises ``InconsistentResponse`` if the values differ on a group of
    numerically equal eigenvalues.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (spectrum.n_nodes,):
        raise DimensionMismatch(f"expected {spectrum.n_nodes} response values, got {values.shape}")
    check_repeated_consistency(spectrum, values, tol)
    beta = _normalization(values) if normalize else 1.0
    return SpectralFilter(beta * values, "tabulated", {}, beta)


def polynomial(spectrum: SpectralGraph, coeffs, normalize: bool = False) -> SpectralFilter:
    """Filter ``sum_k c_k lambda^k``."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    raw = np.polynomial.polynomial.polyval(spectrum.eigenvalues, coeffs)
    beta = _normalization(raw) if normalize else 1.0
    return SpectralFilter(beta * raw, "polynomial", {"coeffs": coeffs.tolist()}, beta)


def check_repeated_consistency(spectrum: SpectralGraph, response, tol=TOL_RESPONSE):
    scale = max(float(np.max(np.abs(response))), 1.0)
    for g in spectrum.groups:
        if len(g) > 1 and np.ptp(response[g]) > tol * scale:
            raise InconsistentResponse(
                f"response differs on repeated eigenvalue {spectrum.eigenvalues[g[0]]:.6g}"
            )


def smoothness_ratio(filt: SpectralFilter, spectrum: SpectralGraph) -> float:
    """Energy-weighted mean graph frequency divided by the plain mean.

    Values below one mean the filter is smooth; the all-pass filter gives one.
    """
    _check(filt, spectrum)
    h2 = filt.response**2
    energy = h2.sum()
    if energy <= 1e-300:
        raise ZeroFilter("filter response is identically zero")
    return float((spectrum.eigenvalues @ h2) / energy / spectrum.lambda_avg)


def lpf_order_ratio(filt: SpectralFilter, k: int, tol=0.0) -> float:
    """High-band max over low-band min of ``|h|`` for cutoff index ``k`` (1-based)."""
    n = filt.n
    if not 1 <= k <= n - 1:
        raise OrderTooHigh(f"k must lie in [1, {n - 1}], got {k}")
    a = np.abs(filt.response)
    low = a[:k].min()
    if low <= tol:
        raise LowBandZero(f"min |h| over the first {k} frequencies is {low:.3g}")
    return float(a[k:].max() / low)


@dataclass(frozen=True)
class Claim1Result:
    is_lpf_smooth: bool
    J: int
    bound: float
    eta: float


def average_crossing_index(spectrum: SpectralGraph) -> int:
    """Largest (1-based) index ``J`` with ``lambda_J <= lambda_avg``."""
    return int(np.searchsorted(spectrum.eigenvalues, spectrum.lambda_avg, side="right"))


def claim1_check(spectrum: SpectralGraph, filt: SpectralFilter, K: int) -> Claim1Result:
    """Sufficient LPF condition for smoothness.

    With ``J`` the last index below the mean eigenvalue and ``K <= J``, a
    filter with ``eta_K^2 < sum_{n<=K}(lambda_n - avg) / sum_{n<=J}(lambda_n - avg)``
    is smooth.
    """
    _check(filt, spectrum)
    J = average_crossing_index(spectrum)
    if K > J or K < 1:
        raise OrderTooHigh(f"K={K} must lie in [1, J={J}]")
    centred = spectrum.eigenvalues - spectrum.lambda_avg
    bound = float(centred[:K].sum() / centred[:J].sum())
    try:
        eta = lpf_order_ratio(filt, K)
    except LowBandZero:
        return Claim1Result(False, J, bound, float("inf"))
    return Claim1Result(bool(eta**2 < bound), J, bound, eta)


def pseudo_inverse_square(filt: SpectralFilter, tol=TOL_SING) -> SpectralFilter:
    """Spectral pseudo-inverse of ``h^2(L)``: ``1/h^2`` on the support, 0 elsewhere."""
    return SpectralFilter(_pinv_sq(filt.response, tol), "pinv_square", {"of": filt.kind})


def _pinv_sq(response, tol=TOL_SING):
    a = np.abs(response)
    out = np.zeros_like(a)
    if a.max() == 0:
        return out
    supp = a > tol * a.max()
    out[supp] = 1.0 / a[supp] ** 2
    return out


def support(filt: SpectralFilter, tol=TOL_SING) -> np.ndarray:
    a = np.abs(filt.response)
    if a.max() == 0:
        return np.zeros(a.shape, dtype=bool)
    return a > tol * a.max()


def apply_filter(filt: SpectralFilter, spectrum: SpectralGraph, x) -> np.ndarray:
    """``V diag(h) V^T x``; ``x`` may be a single signal or rows of signals."""
    _check(filt, spectrum)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spectrum.n_nodes:
        raise DimensionMismatch(f"signal length {x.shape[-1]} != {spectrum.n_nodes}")
    V = spectrum.eigenvectors
    return ((x @ V) * filt.response) @ V.T


def filter_matrix(filt: SpectralFilter, spectrum: SpectralGraph) -> np.ndarray:
    _check(filt, spectrum)
    return spectrum.spectral_matrix(filt.response)


def quadform_polynomial(L, coeffs, X) -> float:
    """``sum_m x_m^T (sum_k c_k L^k) x_m`` using only matrix products with ``L``.

    Horner's scheme applies ``L`` once per coefficient beyond the constant.
    """
    L = np.asarray(L, dtype=float)
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    Xv = as_values(X)
    if Xv.shape[-1] != L.shape[0]:
        raise DimensionMismatch(f"signal length {Xv.shape[-1]} != {L.shape[0]}")
    acc = coeffs[-1] * Xv
    for c in coeffs[-2::-1]:
        acc = acc @ L + c * Xv
    return float(np.sum(Xv * acc))


def expected_tv(spectrum: SpectralGraph, filt: SpectralFilter, sigma2: float, mu=None) -> float:
    """``sigma^2 Tr(L h^2(L)) + mu^T L mu``."""
    _check(filt, spectrum)
    value = sigma2 * float(spectrum.eigenvalues @ filt.response**2)
    if mu is not None:
        mu = np.asarray(mu, dtype=float)
        value += float(mu @ spectrum.laplacian @ mu)
    return value


def absorb_mean(spectrum: SpectralGraph, h_bar: SpectralFilter, mu, sigma2: float,
                tol_align=TOL_ALIGN) -> SpectralFilter:
    """Fold a deterministic mean into a zero-mean filter model.

    The mean must be an eigenvector of ``L``: either aligned with a single
    column of ``V`` or lying in the eigenspace of a repeated eigenvalue. The
    new squared response adds ``(v_n^T mu)^2 / sigma^2`` at each index; in the
    repeated-eigenvalue case the increment is spread over the columns of the
    stored basis, which keeps the expected total variation exact but lets the
    response vary inside that eigenvalue group.
    """
    _check(h_bar, spectrum)
    if not sigma2 > 0:
        raise InvalidParameter("sigma2 must be positive")
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (spectrum.n_nodes,):
        raise DimensionMismatch(f"mean must have length {spectrum.n_nodes}")
    norm = np.linalg.norm(mu)
    if norm == 0:
        return h_bar
    coef = spectrum.eigenvectors.T @ mu
    cos = np.abs(coef) / norm
    aligned = None
    if cos.max() >= 1 - tol_align:
        aligned = [int(np.argmax(cos))]
    else:
        for g in spectrum.groups:
            if len(g) > 1 and np.linalg.norm(coef[g]) / norm >= 1 - tol_align:
                aligned = list(g)
                break
    if aligned is None:
        raise MeanNotEigenvector(
            f"mean is not an eigenvector of L (best |cos| = {cos.max():.6f})"
        )
    h2 = h_bar.response**2
    h2[aligned] += coef[aligned] ** 2 / sigma2
    sign = np.where(h_bar.response < 0, -1.0, 1.0)
    params = {"base": h_bar.kind, "indices": aligned}
    return SpectralFilter(sign * np.sqrt(h2), "absorbed", params, h_bar.beta)


def filter_from_config(spectrum: SpectralGraph, config) -> SpectralFilter:
    """Build a filter from ``{kind, params, normalize}`` (see :mod:`graphsmooth.io`)."""
    kind = config["kind"]
    params = dict(config.get("params", {}))
    scale = float(params.pop("scale", 1.0))
    if kind in BOX1_KINDS:
        filt = make_box1_filter(spectrum, kind, config.get("normalize", True),
                                alpha=params.get("alpha"), tau=params.get("tau"))
    elif kind == "allpass":
        filt = allpass(spectrum)
    elif kind in ("poly", "polynomial"):
        filt = polynomial(spectrum, params["coeffs"], config.get("normalize", False))
    elif kind == "tabulated":
        filt = tabulated(spectrum, params["values"], config.get("normalize", False))
    else:
        raise InvalidParameter(f"unknown filter kind {kind!r}")
    return filt.scaled(scale) if scale != 1.0 else filt
