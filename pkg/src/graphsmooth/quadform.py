"""Distribution of weighted sums of independent chi-square variables.

For ``Q = sum_n w_n c_n`` with ``c_n ~ chi2(M)`` independent, this module
evaluates ``Pr(Q <= delta)`` and inverts it to calibrate detector thresholds.
The reference method integrates the characteristic function numerically
(Imhof 1961); a three-moment Pearson approximation is available as a fast path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from .exceptions import DegenerateSpectrum, EmptySupport, InvalidParameter, NumericalFailure
from .filters import SpectralFilter, TOL_SING, _pinv_sq, support
from .graph import SpectralGraph

# absolute error accepted from the integrator before NumericalFailure is raised
TOL_CDF = 1e-7
_MERGE_RTOL = 1e-12
_FAR_TAIL = 1e-12
_BISECT_MAXITER = 80


@dataclass(frozen=True, eq=False)
class QuadFormLaw:
    """Law of ``sum_n w_n c_n`` with ``c_n`` i.i.d. ``chi2(dof)``.

    Zero weights are dropped at construction.
    """

    dof: int
    weights: np.ndarray

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise InvalidParameter(f"dof must be a positive integer, got {self.dof!r}")
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if not np.all(np.isfinite(w)):
            raise InvalidParameter("weights must be finite")
        w = w[w != 0.0]
        if w.size == 0:
            raise EmptySupport("law has no nonzero weight")
        w.setflags(write=False)
        object.__setattr__(self, "dof", int(self.dof))
        object.__setattr__(self, "weights", w)

    @property
    def mean(self) -> float:
        return float(self.dof * self.weights.sum())

    @property
    def variance(self) -> float:
        return float(2 * self.dof * np.sum(self.weights**2))

    def grouped(self):
        """Distinct weights and the total degrees of freedom carried by each."""
        w = np.sort(self.weights)
        distinct, counts = [w[0]], [1]
        for v in w[1:]:
            if abs(v - distinct[-1]) <= _MERGE_RTOL * max(abs(v), abs(distinct[-1])):
                counts[-1] += 1
            else:
                distinct.append(v)
                counts.append(1)
        return np.array(distinct), self.dof * np.array(counts, dtype=float)

    def sample(self, rng, size) -> np.ndarray:
        c = rng.chisquare(self.dof, size=(size, self.weights.size))
        return c @ self.weights


def quadform_weights(h_a: SpectralFilter, h_b: SpectralFilter, tol=TOL_SING) -> np.ndarray:
    """Weights ``h_a(lambda_n) h_b(lambda_n)^2`` over the support of ``h_b``."""
    if h_a.n != h_b.n:
        raise InvalidParameter("filters must share a spectrum")
    supp = support(h_b, tol)
    if not supp.any():
        raise EmptySupport("h_b is identically zero")
    return h_a.response[supp] * h_b.response[supp] ** 2


def law_from_filters(h_a: SpectralFilter, h_b: SpectralFilter, M: int) -> QuadFormLaw:
    return QuadFormLaw(M, quadform_weights(h_a, h_b))


# ---------------------------------------------------------------------------
# CDF evaluation


def _imhof_sf(w, h, x):
    """``Pr(Q > x)`` by Imhof's integral for distinct weights ``w`` with dof ``h``.

    The integral is split at ``u0``: adaptive quadrature below it and a
    Fourier-weighted rule (QUADPACK QAWF) above, since past ``u0`` the
    integrand is a bounded-phase amplitude times ``sin/cos(x u / 2)`` and
    decays only algebraically when the total dof is small.
    """
    s = np.max(np.abs(w))
    w = w / s
    x = x / s
    half_h = 0.5 * h
    quarter_h = 0.25 * h

    def phase_amp(u):
        wu = w * u
        return half_h @ np.arctan(wu), np.exp(-(quarter_h @ np.log1p(wu * wu))) / u

    def f(u):
        if u == 0.0:
            return 0.5 * (h @ w - x)
        a, amp = phase_amp(u)
        return math.sin(a - 0.5 * x * u) * amp

    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if x == 0.0:
            val, err = integrate.quad(f, 0.0, np.inf, limit=500, epsabs=1e-12, epsrel=1e-10)
        else:
            b = 0.5 * abs(x)
            u0 = 1.0
            v1, e1 = integrate.quad(f, 0.0, u0, limit=2000, epsabs=1e-12, epsrel=1e-10)

            def fs(u):
                a, amp = phase_amp(u)
                return math.sin(a) * amp

            def fc(u):
                a, amp = phase_amp(u)
                return math.cos(a) * amp

            # sin(a - x u / 2) = sin(a) cos(b u) - sign(x) cos(a) sin(b u)
            v2, e2 = integrate.quad(fs, u0, np.inf, weight="cos", wvar=b, limlst=200, epsabs=1e-12)
            v3, e3 = integrate.quad(fc, u0, np.inf, weight="sin", wvar=b, limlst=200, epsabs=1e-12)
            val = v1 + v2 - math.copysign(1.0, x) * v3
            err = e1 + e2 + e3
    err /= math.pi
    if not np.isfinite(val) or err > TOL_CDF:
        raise NumericalFailure(f"Imhof integration did not converge (error bound {err:.3g})", err)
    return 0.5 + val / math.pi


def _chernoff_upper(w, h, x):
    """Chernoff bound on ``Pr(Q >= x)``; 1 when no useful bound exists."""
    wp = w[w > 0]
    if wp.size == 0:
        return 0.0 if x > 0 else 1.0
    t_max = 0.5 / wp.max()

    def log_bound(t):
        return -t * x - 0.5 * (h @ np.log1p(-2 * t * w))

    res = optimize.minimize_scalar(log_bound, bounds=(0.0, t_max * (1 - 1e-12)), method="bounded",
                                   options={"xatol": 1e-12 * t_max})
    return float(math.exp(min(res.fun, 0.0)))


def _far_tail(w, h, x):
    """0 or 1 when a Chernoff bound puts ``x`` beyond the mass of ``Q`` (to 1e-12), else ``None``."""
    if _chernoff_upper(w, h, x) <= _FAR_TAIL:
        return 0.0
    if _chernoff_upper(-w, h, -x) <= _FAR_TAIL:
        return 1.0
    return None


def _exact_single(weight, h, x, upper):
    # weight * chi2(h)
    if weight > 0:
        return stats.chi2.sf(x / weight, h) if upper else stats.chi2.cdf(x / weight, h)
    return stats.chi2.cdf(x / weight, h) if upper else stats.chi2.sf(x / weight, h)


def _pearson_sf(law: QuadFormLaw, x):
    k1 = law.mean
    k2 = law.variance
    k3 = 8 * law.dof * np.sum(law.weights**3)
    skew = k3 / k2**1.5
    z = (x - k1) / math.sqrt(k2)
    if abs(skew) < 1e-8:
        return stats.norm.sf(z)
    nu = 8.0 / skew**2
    t = nu + math.copysign(1.0, skew) * z * math.sqrt(2 * nu)
    return stats.chi2.sf(t, nu) if skew > 0 else stats.chi2.cdf(t, nu)


def quadform_sf(law: QuadFormLaw, delta: float, method: str = "imhof") -> float:
    """``Pr(sum_n w_n c_n > delta)``."""
    delta = float(delta)
    w, h = law.grouped()
    if method == "pearson":
        p = _pearson_sf(law, delta)
    elif method != "imhof":
        raise InvalidParameter(f"unknown method {method!r}")
    elif w.size == 1:
        p = _exact_single(w[0], h[0], delta, upper=True)
    elif np.all(w > 0) and delta <= 0:
        p = 1.0
    elif np.all(w < 0) and delta >= 0:
        p = 0.0
    else:
        p = _far_tail(w, h, delta)
        if p is None:
            p = _imhof_sf(w, h, delta)
    return float(min(max(p, 0.0), 1.0))


def quadform_cdf(law: QuadFormLaw, delta: float, method: str = "imhof") -> float:
    """``Pr(sum_n w_n c_n <= delta)`` with ``c_n`` i.i.d. ``chi2(M)``.

    Negative weights are allowed. The default method is the numerical
    inversion of the characteristic function; ``method="pearson"`` uses a
    shifted/scaled chi-square matched on three cumulants.
    """
    return 1.0 - quadform_sf(law, delta, method)


def _tail_of_weights(weights, dof, delta, method="imhof"):
    """Strict upper tail; an all-zero statistic is compared directly against ``delta``."""
    weights = np.asarray(weights, dtype=float)
    if not np.any(weights != 0):
        return 1.0 if 0.0 > delta else 0.0
    return quadform_sf(QuadFormLaw(dof, weights), delta, method)


# ---------------------------------------------------------------------------
# Detector-specific laws


def lrt_weights(h0: SpectralFilter, h1: SpectralFilter) -> np.ndarray:
    """``h0^2 ((h0^2)^+ - (h1^2)^+)`` on the support of ``h0``."""
    if h0.n != h1.n:
        raise InvalidParameter("filters must share a spectrum")
    supp = support(h0)
    if not supp.any():
        raise EmptySupport("h0 is identically zero")
    h0sq = h0.response**2
    return (h0sq * (_pinv_sq(h0.response) - _pinv_sq(h1.response)))[supp]


def lrt_tail_prob(h0: SpectralFilter, h1: SpectralFilter, M: int, gamma: float,
                  method: str = "imhof") -> float:
    """False-alarm probability ``Pr(LRT > gamma | H0)``.

    The statistic is ``(1 / 2 sigma^2) sum_m x_m^T D x_m`` with
    ``D = (h0^2)^+ - (h1^2)^+`` and ``x_m ~ N(0, sigma^2 h0^2)``. Writing
    ``x_m = sigma h0(L) y_m`` turns ``sum_m x_m^T D x_m / sigma^2`` into a
    weighted chi-square sum with weights ``h0^2 D`` and no ``sigma``; the
    remaining factor 1/2 moves to the threshold, giving ``delta = 2 gamma``.
    """
    return _tail_of_weights(lrt_weights(h0, h1), M, 2.0 * gamma, method)


def _bracketed_threshold(tail, lo, hi, target):
    """Smallest-tail-above-target crossing of a non-increasing ``tail`` on ``[lo, hi]``."""
    f_lo, f_hi = tail(lo) - target, tail(hi) - target
    if f_hi > 0:
        raise NumericalFailure(f"tail at upper bracket {hi:.6g} still exceeds target")
    if f_lo <= 0:
        return lo
    xtol = 1e-10 * (hi - lo)
    g = optimize.brentq(lambda t: tail(t) - target, lo, hi, xtol=xtol, maxiter=_BISECT_MAXITER)
    # step to the conservative side of the crossing
    step = xtol
    while tail(g) > target and g < hi:
        g = min(g + step, hi)
        step *= 2
    return g


def lrt_threshold(h0: SpectralFilter, h1: SpectralFilter, M: int, target_pfa: float,
                  method: str = "imhof") -> float:
    """Threshold ``gamma`` with ``Pr(LRT > gamma | H0) <= target_pfa`` (and as close as possible)."""
    if not 0 < target_pfa < 1:
        raise InvalidParameter("target_pfa must lie in (0, 1)")
    w = lrt_weights(h0, h1)
    lo = 0.5 * min(0.0, np.sum(w[w < 0]) * M * 50)
    hi = 0.5 * np.sum(w[w > 0]) * M * 50
    if not np.any(w != 0):
        return 0.0
    if hi <= lo:
        hi = lo + 1.0
    return _bracketed_threshold(lambda g: lrt_tail_prob(h0, h1, M, g, method), lo, hi, target_pfa)


def semi_weights(spectrum: SpectralGraph, gamma: float) -> np.ndarray:
    """``1 - gamma / lambda_n`` for the nonzero frequencies."""
    return 1.0 - gamma / spectrum.eigenvalues[1:]


def semi_tail_prob(spectrum: SpectralGraph, M: int, gamma: float, method: str = "imhof") -> float:
    """``Pr(sum_m x^T L x / sum_m x^T x > gamma)`` for ``x ~ N(0, sigma^2 L^+)``.

    The ratio event equals ``sum_m x^T (L - gamma I) x > 0``, so the tail is
    taken at zero.
    """
    return _tail_of_weights(semi_weights(spectrum, gamma), M, 0.0, method)


def semi_threshold(spectrum: SpectralGraph, M: int, target_pfa: float, method: str = "imhof") -> float:
    """Raw TV-to-energy ratio threshold in ``(0, lambda_N)`` at the given false-alarm level.

    Compare against ``lambda_avg * r_hat``; :func:`graphsmooth.detectors.semi_detect`
    does the normalization.
    """
    if not 0 < target_pfa < 1:
        raise InvalidParameter("target_pfa must lie in (0, 1)")
    lam = spectrum.eigenvalues
    nz = lam[1:]
    if nz.size < 2 or np.ptp(nz) <= spectrum.tol_group:
        raise DegenerateSpectrum(
            "only one distinct nonzero eigenvalue: the ratio statistic is constant "
            f"({nz[0]:.6g}) under the null model"
        )
    g = lambda t: semi_tail_prob(spectrum, M, t, method) - target_pfa  # noqa: E731
    lo, hi = float(nz[0]), float(nz[-1])
    xtol = 1e-10 * (hi - lo)
    gamma = optimize.brentq(g, lo, hi, xtol=xtol, maxiter=_BISECT_MAXITER)
    step = xtol
    while g(gamma) > 0 and gamma < hi:
        gamma = min(gamma + step, hi)
        step *= 2
    return gamma


def glrt_weights(h0: SpectralFilter, h1: SpectralFilter, gamma: float) -> np.ndarray:
    if h0.n != h1.n:
        raise InvalidParameter("filters must share a spectrum")
    supp = support(h0)
    h0sq = h0.response**2
    return (h0sq * (_pinv_sq(h0.response) - gamma * _pinv_sq(h1.response)))[supp]


def glrt_tail_prob(h0: SpectralFilter, h1: SpectralFilter, M: int, gamma: float,
                   method: str = "imhof") -> float:
    """False-alarm probability of the ratio test with unknown input variance.

    ``GLRT = sum x^T (h0^2)^+ x / sum x^T (h1^2)^+ x > gamma``; the noise
    variance cancels, so none is taken.
    """
    if not gamma > 0:
        raise InvalidParameter("gamma must be positive")
    return _tail_of_weights(glrt_weights(h0, h1, gamma), M, 0.0, method)
