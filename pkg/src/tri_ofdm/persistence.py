"""Vietoris-Rips persistent homology (H0 and H1) for finite point clouds.

H0 is computed from single-linkage merge heights (the deaths of components
under a growing distance threshold equal the MST edge weights), H1 by mod-2
reduction of the triangle boundary matrix restricted to simplices within the
filtration radius.  Diagrams for scalar-valued samples are obtained by
standardizing the 2-D sample cloud and running the H0 filtration on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import pdist


class PersistenceError(ValueError):
    """Base class for invalid persistence inputs."""


class DegenerateCloudError(PersistenceError):
    """Raised when a cloud has zero diameter and no filtration scale exists."""


class IncomparableDiagramsError(PersistenceError):
    """Raised when two diagrams cannot be matched (infinite-feature mismatch)."""


@dataclass(frozen=True)
class Lifetimes:
    """Finite feature lifetimes (death - birth) of one homology dimension."""

    values: np.ndarray
    dim: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise PersistenceError("lifetimes must be a 1-D array")
        if values.size and (not np.all(np.isfinite(values)) or np.any(values < 0)):
            raise PersistenceError("lifetimes must be finite and non-negative")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) pairs for one homology dimension.

    Infinite deaths are stored as ``np.inf``; they are never approximated by
    a large finite value.
    """

    dim: int
    births: np.ndarray
    deaths: np.ndarray

    def __post_init__(self):
        births = np.atleast_1d(np.asarray(self.births, dtype=float))
        deaths = np.atleast_1d(np.asarray(self.deaths, dtype=float))
        if births.shape != deaths.shape or births.ndim != 1:
            raise PersistenceError("births/deaths must be 1-D arrays of equal length")
        if not np.all(np.isfinite(births)):
            raise PersistenceError("births must be finite")
        if np.any(deaths < births):
            raise PersistenceError("every death must be >= its birth")
        if self.dim not in (0, 1):
            raise PersistenceError("only H0 and H1 diagrams are supported")
        object.__setattr__(self, "births", births)
        object.__setattr__(self, "deaths", deaths)

    @property
    def n_features(self) -> int:
        return self.births.size

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.deaths)

    @property
    def n_infinite(self) -> int:
        return int(np.sum(~self.finite_mask))

    def to_json(self) -> str:
        """Serialize as a JSON array of {birth, death|null, dim}."""
        rows = [
            {
                "birth": float(b),
                "death": (float(d) if np.isfinite(d) else None),
                "dim": self.dim,
            }
            for b, d in zip(self.births, self.deaths)
        ]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str) -> "PersistenceDiagram":
        rows = json.loads(text)
        if not rows:
            return cls(dim=0, births=np.empty(0), deaths=np.empty(0))
        dims = {r["dim"] for r in rows}
        if len(dims) != 1:
            raise PersistenceError("serialized diagram mixes homology dimensions")
        births = np.array([r["birth"] for r in rows], dtype=float)
        deaths = np.array(
            [np.inf if r["death"] is None else r["death"] for r in rows], dtype=float
        )
        return cls(dim=dims.pop(), births=births, deaths=deaths)


def _validate_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise PersistenceError("point cloud must be a 2-D array (n_points, dim)")
    if pts.shape[0] < 2:
        raise PersistenceError("persistence needs at least 2 points")
    if pts.shape[1] < 1:
        raise PersistenceError("ambient dimension must be >= 1")
    if not np.all(np.isfinite(pts)):
        raise PersistenceError("point coordinates must be finite")
    return pts


def _h0_diagram(points: np.ndarray, max_radius: float) -> PersistenceDiagram:
    # Single-linkage merge heights equal the MST edge weights, which are the
    # exact H0 death times of the Rips filtration (births all at 0).  The
    # multiset of heights does not depend on how ties are broken.
    merge_heights = np.sort(linkage(points, method="single")[:, 2])
    finite = merge_heights[merge_heights <= max_radius]
    n_components = int(np.sum(merge_heights > max_radius)) + 1
    births = np.zeros(finite.size + n_components)
    deaths = np.concatenate([finite, np.full(n_components, np.inf)])
    return PersistenceDiagram(dim=0, births=births, deaths=deaths)


def _h1_diagram(points: np.ndarray, max_radius: float) -> PersistenceDiagram:
    """H1 pairs via mod-2 reduction of the triangle boundary matrix.

    Edges are sorted by (length, i, j) and triangles by (filtration, i, j, k),
    which makes the output deterministic for a fixed input ordering.  Columns
    are kept as Python integers (bit i set = edge with sorted rank i), so a
    column addition is a single XOR.  H0 pairing is not re-derived here: with
    only H1 requested, reducing the triangle matrix alone yields all (edge,
    triangle) pairs, and cycle-creating edges never paired stay at +inf.
    """
    n = points.shape[0]
    dists = pdist(points)

    ii, jj = np.triu_indices(n, k=1)
    keep = dists <= max_radius
    ei, ej, ew = ii[keep], jj[keep], dists[keep]
    order = np.lexsort((ej, ei, ew))
    ei, ej, ew = ei[order], ej[order], ew[order]
    n_edges = ei.size
    if n_edges == 0:
        return PersistenceDiagram(dim=1, births=np.empty(0), deaths=np.empty(0))

    # rank of each kept edge in the sorted order, addressable by (i, j)
    edge_rank = {}
    for r in range(n_edges):
        edge_rank[(int(ei[r]), int(ej[r]))] = r

    # adjacency bitmasks over vertices for triangle enumeration
    adj = [0] * n
    for a, b in zip(ei, ej):
        adj[a] |= 1 << int(b)
        adj[b] |= 1 << int(a)

    # cycle-creating ("positive") edges: those that do not merge components
    parent = list(range(n))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    positive = np.zeros(n_edges, dtype=bool)
    for r in range(n_edges):
        ra, rb = find(int(ei[r])), find(int(ej[r]))
        if ra == rb:
            positive[r] = True
        else:
            parent[ra] = rb

    # triangles (i<j<k, all edges kept), filtration = longest edge
    tri_rows = []
    tri_filt = []
    for r in range(n_edges):
        a, b = int(ei[r]), int(ej[r])
        common = adj[a] & adj[b]
        # k > b keeps each triangle once with a < b < k
        common >>= b + 1
        k = b + 1
        while common:
            shift = (common & -common).bit_length() - 1
            k += shift
            common >>= shift + 1
            r_ak = edge_rank[(a, k)]
            r_bk = edge_rank[(b, k)]
            tri_rows.append((r, r_ak, r_bk))
            tri_filt.append(max(ew[r], ew[r_ak], ew[r_bk]))
            k += 1

    births, deaths = [], []
    if tri_rows:
        tri_filt = np.asarray(tri_filt)
        tri_arr = np.asarray(tri_rows)
        t_order = np.lexsort((tri_arr[:, 2], tri_arr[:, 1], tri_arr[:, 0], tri_filt))
        pivot_col: dict[int, int] = {}
        pivot_filt: dict[int, float] = {}
        n_positive = int(np.sum(positive))
        for t in t_order:
            if len(pivot_col) == n_positive:
                break  # every cycle is already killed
            r1, r2, r3 = tri_arr[t]
            col = (1 << int(r1)) | (1 << int(r2)) | (1 << int(r3))
            while col:
                low = col.bit_length() - 1
                if low not in pivot_col:
                    pivot_col[low] = col
                    pivot_filt[low] = float(tri_filt[t])
                    break
                col ^= pivot_col[low]

        for low, death in pivot_filt.items():
            birth = float(ew[low])
            if death > birth:
                births.append(birth)
                deaths.append(death)
        paired = set(pivot_col)
    else:
        paired = set()

    for r in np.flatnonzero(positive):
        if int(r) not in paired:
            births.append(float(ew[r]))
            deaths.append(np.inf)

    births = np.asarray(births, dtype=float)
    deaths = np.asarray(deaths, dtype=float)
    order = np.lexsort((deaths, births))
    return PersistenceDiagram(dim=1, births=births[order], deaths=deaths[order])


def rips_persistence(cloud, max_dim: int, max_radius: float) -> list[PersistenceDiagram]:
    """Persistence diagrams of the Vietoris-Rips filtration up to ``max_dim``.

    Parameters
    ----------
    cloud : (n, D) array-like
        Point cloud; n >= 2, finite coordinates.
    max_dim : int
        0 for components only, 1 to add loops.
    max_radius : float
        Filtration truncation radius; edges and triangles longer than this are
        not created, so features alive at ``max_radius`` get infinite deaths.

    Returns
    -------
    list of PersistenceDiagram, one per dimension 0..max_dim.
    """
    pts = _validate_cloud(cloud)
    if max_dim not in (0, 1):
        raise PersistenceError("max_dim must be 0 or 1")
    if not (np.isfinite(max_radius) and max_radius > 0):
        raise PersistenceError("max_radius must be a positive finite scalar")
    diagrams = [_h0_diagram(pts, max_radius)]
    if max_dim == 1:
        diagrams.append(_h1_diagram(pts, max_radius))
    return diagrams


def sublevel_h0(samples) -> PersistenceDiagram:
    """H0 diagram of standardized (x, f) sample pairs.

    Each coordinate is standardized to zero mean and unit variance (a
    zero-variance coordinate is left at zero), then the Rips H0 filtration is
    run with ``max_radius`` equal to the diameter of the standardized cloud.
    """
    pts = _validate_cloud(samples)
    if pts.shape[1] != 2:
        raise PersistenceError("sublevel_h0 expects (x, f) pairs")
    centered = pts - pts.mean(axis=0)
    std = centered.std(axis=0)
    if np.all(std < 1e-300):
        raise DegenerateCloudError("all samples identical: no filtration scale")
    scaled = np.where(std > 0, centered / np.where(std > 0, std, 1.0), 0.0)
    diameter = float(np.max(pdist(scaled)))
    if diameter <= 0:
        raise DegenerateCloudError("standardized cloud has zero diameter")
    return rips_persistence(scaled, max_dim=0, max_radius=diameter)[0]


def lifetimes(diagram: PersistenceDiagram) -> Lifetimes:
    """Finite-feature lifetimes, in diagram order."""
    mask = diagram.finite_mask
    return Lifetimes(values=diagram.deaths[mask] - diagram.births[mask], dim=diagram.dim)


def _matching_feasible(cost_ok: np.ndarray) -> bool:
    """Perfect-matching feasibility on a boolean bipartite adjacency matrix."""
    n_left, n_right = cost_ok.shape
    if n_left != n_right:
        return False
    match_right = np.full(n_right, -1)

    def try_assign(u: int, visited: np.ndarray) -> bool:
        for v in np.flatnonzero(cost_ok[u]):
            if visited[v]:
                continue
            visited[v] = True
            if match_right[v] < 0 or try_assign(match_right[v], visited):
                match_right[v] = u
                return True
        return False

    for u in range(n_left):
        if not try_assign(u, np.zeros(n_right, dtype=bool)):
            return False
    return True


def bottleneck_distance(d1: PersistenceDiagram, d2: PersistenceDiagram) -> float:
    """Exact bottleneck distance between two diagrams of the same dimension.

    Finite features may be matched to each other or to the diagonal; infinite
    features must be matched among themselves (mismatched counts raise).  The
    optimum is found by binary search over the finite set of candidate values
    with a bipartite-matching feasibility test at each candidate.
    """
    if d1.dim != d2.dim:
        raise IncomparableDiagramsError("diagrams have different homology dimensions")
    inf1 = ~d1.finite_mask
    inf2 = ~d2.finite_mask
    if int(inf1.sum()) != int(inf2.sum()):
        raise IncomparableDiagramsError(
            "diagrams have different numbers of infinite features"
        )
    # Optimal matching of infinite features minimizes the max birth gap:
    # sort births and pair in order.
    inf_value = 0.0
    if inf1.any():
        b1 = np.sort(d1.births[inf1])
        b2 = np.sort(d2.births[inf2])
        inf_value = float(np.max(np.abs(b1 - b2)))

    p1 = np.column_stack([d1.births[d1.finite_mask], d1.deaths[d1.finite_mask]])
    p2 = np.column_stack([d2.births[d2.finite_mask], d2.deaths[d2.finite_mask]])
    n1, n2 = p1.shape[0], p2.shape[0]
    if n1 == 0 and n2 == 0:
        return inf_value

    diag1 = (p1[:, 1] - p1[:, 0]) / 2 if n1 else np.empty(0)
    diag2 = (p2[:, 1] - p2[:, 0]) / 2 if n2 else np.empty(0)
    if n1 and n2:
        cross = np.max(
            np.abs(p1[:, None, :] - p2[None, :, :]), axis=2
        )  # pairwise L-infinity
    else:
        cross = np.empty((n1, n2))

    candidates = np.unique(np.concatenate([diag1, diag2, cross.ravel(), [0.0]]))

    def feasible(r: float) -> bool:
        # Left side: p1 points then n2 virtual diagonal slots.
        # Right side: p2 points then n1 virtual diagonal slots.
        size = n1 + n2
        ok = np.zeros((size, size), dtype=bool)
        if n1 and n2:
            ok[:n1, :n2] = cross <= r
        for i in range(n1):
            ok[i, n2:] = diag1[i] <= r
        for j in range(n2):
            ok[n1:, j] = diag2[j] <= r
        ok[n1:, n2:] = True  # diagonal-to-diagonal is free
        return _matching_feasible(ok)

    lo, hi = 0, candidates.size - 1
    if not feasible(candidates[hi]):  # pragma: no cover - defensive
        raise PersistenceError("no feasible matching at maximal candidate distance")
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(float(candidates[lo]), inf_value)
