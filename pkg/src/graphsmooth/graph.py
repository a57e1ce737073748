"""Weighted graphs, Laplacian spectra, the graph Fourier transform and total variation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .exceptions import (
    DimensionMismatch,
    DisconnectedGraph,
    DuplicateEdge,
    InvalidEdge,
)

TOL_EVD = 1e-9
TOL_NUM = 1e-9
TOL_CONNECT_REL = 1e-8
TOL_GROUP_REL = 1e-8


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with strictly positive edge weights.

    Each unordered node pair may appear at most once in ``edges``; the
    adjacency matrix is symmetrized when materialized.
    """

    n_nodes: int
    edges: tuple = ()

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise InvalidEdge(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        clean = []
        seen = set()
        for i, edge in enumerate(self.edges):
            try:
                src, dst, weight = edge
            except (TypeError, ValueError):
                raise InvalidEdge(f"edge {i} is not a (src, dst, weight) triple: {edge!r}")
            if int(src) != src or int(dst) != dst:
                raise InvalidEdge(f"edge {i}: node ids must be integers")
            src, dst, weight = int(src), int(dst), float(weight)
            if not (0 <= src < self.n_nodes and 0 <= dst < self.n_nodes):
                raise InvalidEdge(f"edge {i}: node id out of range [0, {self.n_nodes})")
            if src == dst:
                raise InvalidEdge(f"edge {i}: self-loop at node {src}")
            if not np.isfinite(weight) or weight <= 0:
                raise InvalidEdge(f"edge {i}: weight must be finite and > 0, got {weight}")
            key = (min(src, dst), max(src, dst))
            if key in seen:
                raise DuplicateEdge(f"edge {i}: duplicate edge between {key[0]} and {key[1]}")
            seen.add(key)
            clean.append((src, dst, weight))
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "edges", tuple(clean))

    @classmethod
    def from_adjacency(cls, W) -> WeightedGraph:
        """Build a graph from a symmetric non-negative adjacency matrix (upper triangle is used)."""
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionMismatch("adjacency must be square")
        if not np.allclose(W, W.T):
            raise InvalidEdge("adjacency must be symmetric")
        iu, ju = np.nonzero(np.triu(W, k=1))
        return cls(W.shape[0], tuple(zip(iu.tolist(), ju.tolist(), W[iu, ju].tolist())))

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n_nodes, self.n_nodes))
        for src, dst, weight in self.edges:
            W[src, dst] = weight
            W[dst, src] = weight
        return W

    def laplacian(self) -> np.ndarray:
        W = self.adjacency()
        return np.diag(W.sum(axis=1)) - W


@dataclass(frozen=True, eq=False)
class SpectralGraph:
    """A connected weighted graph together with its Laplacian eigendecomposition.

    Attributes
    ----------
    graph : WeightedGraph
    laplacian : ndarray, shape (N, N)
    eigenvalues : ndarray, shape (N,)
        Ascending graph frequencies.
    eigenvectors : ndarray, shape (N, N)
        Orthonormal eigenvectors stored as columns.
    """

    graph: WeightedGraph
    laplacian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tol_group: float = field(default=0.0)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def lambda_avg(self) -> float:
        return float(np.mean(self.eigenvalues))

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @cached_property
    def groups(self) -> list:
        """Partition of indices into runs of numerically equal eigenvalues."""
        return eigenvalue_groups(self.eigenvalues, self.tol_group)

    @cached_property
    def laplacian_pinv(self) -> np.ndarray:
        V, lam = self.eigenvectors, self.eigenvalues
        inv = np.zeros_like(lam)
        inv[1:] = 1.0 / lam[1:]
        return (V * inv) @ V.T

    def spectral_matrix(self, response) -> np.ndarray:
        """Return ``V diag(response) V^T``."""
        response = np.asarray(response, dtype=float)
        _check_length(response, self.n_nodes)
        return (self.eigenvectors * response) @ self.eigenvectors.T


def eigenvalue_groups(eigenvalues, tol) -> list:
    """Group consecutive ascending eigenvalues whose gaps are at most ``tol``."""
    groups = [[0]]
    for n in range(1, len(eigenvalues)):
        if eigenvalues[n] - eigenvalues[n - 1] <= tol:
            groups[-1].append(n)
        else:
            groups.append([n])
    return [np.array(g) for g in groups]


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def build_spectral_graph(g: WeightedGraph, tol_connect=None, tol_evd=TOL_EVD) -> SpectralGraph:
    """Compute the Laplacian and its dense symmetric eigendecomposition.

    Parameters
    ----------
    g : WeightedGraph
    tol_connect : float, optional
        Connectivity threshold on the second-smallest eigenvalue. Defaults to
        ``1e-8 * lambda_max``.
    tol_evd : float
        Relative tolerance for the eigenpair residual and orthonormality checks.

    Raises
    ------
    DisconnectedGraph
        If the algebraic connectivity does not exceed ``tol_connect``.
    """
    L = g.laplacian()
    lam, V = np.linalg.eigh(L)
    order = np.argsort(lam, kind="stable")
    lam, V = lam[order], _fix_signs(V[:, order])
    lam_max = max(float(lam[-1]), 0.0)
    if tol_connect is None:
        tol_connect = TOL_CONNECT_REL * lam_max
    if g.n_nodes < 2 or lam[1] <= tol_connect:
        raise DisconnectedGraph(
            f"graph is not connected (lambda_2 = {lam[1] if g.n_nodes > 1 else 0.0:.3g})"
        )
    # the smallest eigenvalue of a Laplacian is exactly zero
    lam[0] = 0.0
    scale = max(lam_max, 1.0)
    resid = np.linalg.norm(L @ V - V * lam, axis=0)
    if np.max(resid) > tol_evd * scale * max(1.0, np.sqrt(g.n_nodes)):
        raise ArithmeticError(f"eigendecomposition residual too large: {np.max(resid):.3g}")
    return SpectralGraph(
        graph=g,
        laplacian=_readonly(L),
        eigenvalues=_readonly(lam),
        eigenvectors=_readonly(V),
        tol_group=TOL_GROUP_REL * lam_max,
    )


def _check_length(x, n):
    if x.shape[-1] != n:
        raise DimensionMismatch(f"expected length {n}, got {x.shape[-1]}")


def gft(sg: SpectralGraph, x) -> np.ndarray:
    """Graph Fourier transform ``V^T x``. Works on the last axis of ``x``."""
    x = np.asarray(x, dtype=float)
    _check_length(x, sg.n_nodes)
    return x @ sg.eigenvectors


def inverse_gft(sg: SpectralGraph, xt) -> np.ndarray:
    xt = np.asarray(xt, dtype=float)
    _check_length(xt, sg.n_nodes)
    return xt @ sg.eigenvectors.T


def total_variation(sg: SpectralGraph, x) -> float:
    """Laplacian quadratic form ``x^T L x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("total_variation expects a single signal")
    _check_length(x, sg.n_nodes)
    return float(max(x @ sg.laplacian @ x, 0.0))


def total_variation_edges(g: WeightedGraph, x) -> float:
    """TV as the weighted sum of squared differences over edges."""
    x = np.asarray(x, dtype=float)
    _check_length(x, g.n_nodes)
    return float(sum(w * (x[s] - x[d]) ** 2 for s, d, w in g.edges))


@dataclass(frozen=True, eq=False)
class SignalBatch:
    """``M`` graph signals stored as the rows of an ``M x N`` matrix."""

    values: np.ndarray
    spectrum: SpectralGraph | None = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise DimensionMismatch("signal batch must be two-dimensional")
        if self.spectrum is not None:
            _check_length(values, self.spectrum.n_nodes)
        object.__setattr__(self, "values", _readonly(values))

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @cached_property
    def gft_values(self) -> np.ndarray:
        if self.spectrum is None:
            raise ValueError("batch has no attached spectrum")
        return _readonly(gft(self.spectrum, self.values))

    def with_spectrum(self, sg: SpectralGraph) -> SignalBatch:
        if self.spectrum is sg:
            return self
        return SignalBatch(self.values, sg)


def as_values(X) -> np.ndarray:
    """Signal matrix of a batch or array-like input."""
    if isinstance(X, SignalBatch):
        return X.values
    return np.atleast_2d(np.asarray(X, dtype=float))


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph(n, tuple((i, i + 1, weight) for i in range(n - 1)))


def graph_from_edges(n_nodes: int, edges: Iterable) -> WeightedGraph:
    return WeightedGraph(n_nodes, tuple(edges))
