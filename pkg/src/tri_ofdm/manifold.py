"""Point-cloud geometry: PCA projection, Gaussian kernels, kNN graphs,
Ollivier-Ricci curvature, and exact discrete optimal transport.

The curvature of an edge (x, y) compares the uniform measures on the two
neighborhoods by exact Wasserstein-1 transport over Euclidean ground costs:
kappa = 1 - W1(m_x, m_y)/d(x, y).  Uniform-to-uniform transport reduces to a
minimum-cost assignment after replicating atoms to a common denominator,
which keeps the per-edge solve exact and fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist

DUPLICATE_EDGE_LENGTH = 1e-12


class ManifoldError(ValueError):
    """Base class for geometry-layer failures."""


class InsufficientHistoryError(ManifoldError):
    """Not enough snapshots for the requested projection dimension."""


class InvalidMeasureError(ManifoldError):
    """Transport weights do not form a probability measure."""


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric Gaussian similarity matrix with unit diagonal."""

    entries: np.ndarray
    gamma: float

    def __post_init__(self):
        k = np.asarray(self.entries, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ManifoldError("kernel must be square")
        if self.gamma <= 0:
            raise ManifoldError("gamma must be positive")
        object.__setattr__(self, "entries", k)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetrized k-nearest-neighbor graph of a point cloud.

    ``knn`` holds each vertex's own k nearest neighbors; ``neighbors`` is the
    symmetrized adjacency (an edge is kept if it appears in either direction's
    list, so a vertex may have more than k graph neighbors).
    """

    n_vertices: int
    k: int
    knn: tuple
    neighbors: tuple
    edges: np.ndarray
    lengths: np.ndarray


@dataclass(frozen=True)
class CurvatureMatrix:
    """Edge curvatures on a NeighborGraph; zero off-edge and on the diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=float)
        if not np.allclose(c, c.T):
            raise ManifoldError("curvature matrix must be symmetric")
        if np.any(np.diag(c) != 0):
            raise ManifoldError("curvature diagonal must be zero")
        if np.any(c > 1 + 1e-12):
            raise ManifoldError("edge curvature cannot exceed 1")
        object.__setattr__(self, "entries", c)

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries, "fro"))


def _as_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ManifoldError("expected a (n, D) point cloud")
    if not np.all(np.isfinite(pts)):
        raise ManifoldError("point coordinates must be finite")
    return pts


def pca_project(history, m: int) -> np.ndarray:
    """Project parameter history onto its top-m principal components.

    The decomposition runs on the n x n Gram matrix of the centered history
    (n snapshots, each of dimension d >> n).  Components with (numerically)
    zero variance produce zero coordinates.  Loadings follow a deterministic
    sign convention: the first nonzero entry of each principal direction is
    positive.
    """
    x = np.asarray(history, dtype=float)
    if x.ndim != 2:
        raise ManifoldError("history must be (n_snapshots, d)")
    n = x.shape[0]
    if n < m + 1:
        raise InsufficientHistoryError(f"need at least {m + 1} snapshots, got {n}")
    centered = x - x.mean(axis=0)
    gram = centered @ centered.T
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1][:m]
    tol = max(n, x.shape[1]) * np.finfo(float).eps * max(float(eigvals[-1]), 0.0)

    out = np.zeros((n, m))
    for col, idx in enumerate(order):
        lam = float(eigvals[idx])
        if lam <= tol or lam <= 0:
            continue
        coords = eigvecs[:, idx] * math.sqrt(lam)
        loading = centered.T @ eigvecs[:, idx] / math.sqrt(lam)
        nonzero = np.flatnonzero(np.abs(loading) > 1e-9 * np.max(np.abs(loading)))
        if nonzero.size and loading[nonzero[0]] < 0:
            coords = -coords
        out[:, col] = coords
    return out


def gaussian_kernel(cloud, gamma: float) -> KernelMatrix:
    """Entrywise similarity exp(-|hi - hj|^2 / (2 gamma^2))."""
    pts = _as_cloud(cloud)
    if gamma <= 0:
        raise ManifoldError("gamma must be positive")
    sq = cdist(pts, pts, "sqeuclidean")
    entries = np.exp(-sq / (2.0 * gamma * gamma))
    np.fill_diagonal(entries, 1.0)
    return KernelMatrix(entries=entries, gamma=float(gamma))


def spectral_gap(kernel: KernelMatrix) -> float:
    """Difference of the two largest kernel eigenvalues.

    One tight cluster concentrates the spectrum in a single dominant
    eigenvalue (large gap); a dispersing or splitting cloud pulls the second
    eigenvalue up and the gap shrinks.
    """
    eigvals = np.linalg.eigvalsh(kernel.entries)
    if eigvals.size < 2:
        raise ManifoldError("spectral gap needs at least a 2x2 kernel")
    return float(eigvals[-1] - eigvals[-2])


def knn_graph(cloud, k: int) -> NeighborGraph:
    """Symmetrized k-nearest-neighbor graph with Euclidean edge lengths.

    Distance ties break by vertex index.  Duplicate points get edges of
    length DUPLICATE_EDGE_LENGTH so downstream curvature ratios stay finite.
    """
    pts = _as_cloud(cloud)
    n = pts.shape[0]
    if not 1 <= k < n:
        raise ManifoldError("need 1 <= k < number of points")
    dist = cdist(pts, pts)
    knn_lists = []
    for i in range(n):
        row = np.delete(np.arange(n), i)
        order = row[np.argsort(dist[i, row], kind="stable")]
        knn_lists.append(order[:k])

    edge_set = set()
    for i, nbrs in enumerate(knn_lists):
        for j in nbrs:
            edge_set.add((min(i, int(j)), max(i, int(j))))
    edges = np.asarray(sorted(edge_set), dtype=int).reshape(-1, 2)
    lengths = np.maximum(dist[edges[:, 0], edges[:, 1]], DUPLICATE_EDGE_LENGTH)

    adjacency = [[] for _ in range(n)]
    for (i, j) in edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    neighbors = tuple(np.asarray(sorted(a), dtype=int) for a in adjacency)
    return NeighborGraph(
        n_vertices=n,
        k=k,
        knn=tuple(np.asarray(a, dtype=int) for a in knn_lists),
        neighbors=neighbors,
        edges=edges,
        lengths=lengths,
    )


def _w1_uniform(atoms_x: np.ndarray, atoms_y: np.ndarray, dist: np.ndarray) -> float:
    """Exact W1 between uniform measures by lcm replication + assignment.

    Uniform weights 1/nx and 1/ny share the denominator lcm(nx, ny); after
    replicating each atom to unit mass 1/lcm the transport polytope's optimum
    is attained at an assignment, solved exactly by the Hungarian method.
    """
    nx, ny = atoms_x.size, atoms_y.size
    lcm = math.lcm(nx, ny)
    cost = dist[np.ix_(atoms_x, atoms_y)]
    expanded = np.repeat(np.repeat(cost, lcm // nx, axis=0), lcm // ny, axis=1)
    rows, cols = linear_sum_assignment(expanded)
    return float(expanded[rows, cols].sum() / lcm)


def ollivier_ricci(graph: NeighborGraph, cloud) -> CurvatureMatrix:
    """Edgewise Ollivier-Ricci curvature kappa = 1 - W1(m_x, m_y)/d(x, y).

    m_x is the uniform measure on x's graph neighbors (no laziness); ground
    costs are Euclidean distances in the ambient cloud.
    """
    pts = _as_cloud(cloud)
    if pts.shape[0] != graph.n_vertices:
        raise ManifoldError("cloud and graph sizes disagree")
    for i, nbrs in enumerate(graph.neighbors):
        if nbrs.size == 0:
            raise ManifoldError(f"vertex {i} is isolated")
    dist = cdist(pts, pts)
    entries = np.zeros((graph.n_vertices, graph.n_vertices))
    for (i, j), d in zip(graph.edges, graph.lengths):
        w1 = _w1_uniform(graph.neighbors[i], graph.neighbors[j], dist)
        kappa = 1.0 - w1 / d
        entries[i, j] = entries[j, i] = kappa
    return CurvatureMatrix(entries=entries)


def wasserstein1_discrete(mu, nu, cost) -> float:
    """Exact optimal transport cost between discrete measures.

    Solved as an LP (simplex, so the value sits at a polytope vertex).  Both
    weight vectors must sum to 1 within 1e-9 and the cost matrix must be
    non-negative.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape != (mu.size, nu.size):
        raise ManifoldError("cost must be (len(mu), len(nu))")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ManifoldError("cost must be finite and non-negative")
    for w in (mu, nu):
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise InvalidMeasureError("weights must be non-negative and sum to 1")

    m, n = c.shape
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    res = linprog(
        c.ravel(),
        A_eq=a_eq[:-1],  # drop one redundant marginal constraint
        b_eq=np.concatenate([mu, nu[:-1]]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:  # pragma: no cover - defensive
        raise ManifoldError(f"transport LP failed: {res.message}")
    return float(res.fun)


def wasserstein2_empirical(x, y) -> float:
    """W2 between equal-size empirical clouds via minimum-cost matching."""
    xs = _as_cloud(x)
    ys = _as_cloud(y)
    if xs.shape[0] != ys.shape[0]:
        raise ManifoldError("empirical W2 needs equal-size clouds")
    if xs.shape[1] != ys.shape[1]:
        raise ManifoldError("clouds must share an ambient dimension")
    sq = cdist(xs, ys, "sqeuclidean")
    rows, cols = linear_sum_assignment(sq)
    return float(np.sqrt(sq[rows, cols].sum() / xs.shape[0]))
