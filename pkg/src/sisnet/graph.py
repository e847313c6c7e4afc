"""Contact graphs: constructors, edge-list loading and spectral analysis.

Graphs are undirected and simple, stored as a dense 0/1 adjacency matrix.
Dense storage is capped at ``MAX_NODES`` nodes, which is far beyond the
desk-scale networks this toolkit targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, FormatError, ParameterError, SizeError, TopologyError

MAX_NODES = 4096

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class ContactGraph:
    """Undirected simple graph with a symmetric binary adjacency matrix.

    The adjacency array is made read-only on construction so instances can be
    shared between ensemble workers.
    """

    adjacency: np.ndarray
    name: str = field(default="graph")

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise TopologyError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise TopologyError("graph must have at least one node")
        if a.shape[0] > MAX_NODES:
            raise SizeError(f"dense storage is limited to {MAX_NODES} nodes, got {a.shape[0]}")
        if not np.all((a == 0.0) | (a == 1.0)):
            raise TopologyError("adjacency entries must be 0 or 1")
        if not np.array_equal(a, a.T):
            raise TopologyError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0.0):
            raise TopologyError("self-loops are not allowed")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @cached_property
    def degree(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1).astype(np.int64)
        d.setflags(write=False)
        return d

    @property
    def n_edges(self) -> int:
        return int(self.degree.sum()) // 2

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour lists as ``(indptr, indices)`` with ascending indices per row."""
        rows, cols = np.nonzero(self.adjacency)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.n), out=indptr[1:])
        indices = cols.astype(np.int64)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        return indptr, indices

    @cached_property
    def spectral(self) -> SpectralData:
        return spectral_radius(self)

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    def is_connected(self) -> bool:
        n_comp, _ = connected_components(self.adjacency, directed=False)
        return n_comp == 1

    def relabel(self, perm) -> ContactGraph:
        """Return the graph with node ``perm[k]`` renamed to ``k``."""
        perm = np.asarray(perm)
        return ContactGraph(self.adjacency[np.ix_(perm, perm)], name=f"{self.name}-relabeled")

    def __repr__(self):
        return f"ContactGraph(name={self.name!r}, n={self.n}, edges={self.n_edges})"


@dataclass(frozen=True)
class SpectralData:
    lambda1: float
    perron: np.ndarray
    iterations: int
    residual: float
    # False when the graph is disconnected; the Perron vector may then vanish
    # outside the dominant component.
    connected: bool = True


def _from_edges(n: int, edges, name: str) -> ContactGraph:
    a = np.zeros((n, n))
    for i, j in edges:
        a[i, j] = a[j, i] = 1.0
    return ContactGraph(a, name=name)


def build_ring(n: int) -> ContactGraph:
    """Cycle graph: node ``i`` is adjacent to ``i - 1`` and ``i + 1`` modulo ``n``."""
    if n < 3:
        raise TopologyError(f"a ring needs at least 3 nodes, got {n}")
    return _from_edges(n, [(i, (i + 1) % n) for i in range(n)], f"ring{n}")


def build_complete(n: int) -> ContactGraph:
    if n < 2:
        raise TopologyError(f"a complete graph needs at least 2 nodes, got {n}")
    a = np.ones((n, n)) - np.eye(n)
    return ContactGraph(a, name=f"complete{n}")


def build_path(n: int) -> ContactGraph:
    if n < 2:
        raise TopologyError(f"a path needs at least 2 nodes, got {n}")
    return _from_edges(n, [(i, i + 1) for i in range(n - 1)], f"path{n}")


def build_star(n: int) -> ContactGraph:
    """Node 0 is the hub, nodes ``1..n-1`` are leaves."""
    if n < 2:
        raise TopologyError(f"a star needs at least 2 nodes, got {n}")
    return _from_edges(n, [(0, i) for i in range(1, n)], f"star{n}")


def build_random(n: int, p: float, seed: int) -> ContactGraph:
    """Erdos-Renyi G(n, p): every unordered pair present independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability must lie in [0, 1], got {p}")
    if n < 1:
        raise TopologyError(f"graph needs at least one node, got {n}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    keep = rng.random(iu[0].size) < p
    a = np.zeros((n, n))
    a[iu[0][keep], iu[1][keep]] = 1.0
    a = a + a.T
    return ContactGraph(a, name=f"gnp{n}-{p:g}-s{seed}")


def load_edge_list(source: str, n: int | None = None, name: str = "edgelist") -> ContactGraph:
    """Parse ``"i j"`` lines with 0-based node indices.

    Text after ``#`` is a comment and blank lines are skipped; duplicate edges in
    either orientation collapse to one. When ``n`` is omitted the node count is
    one more than the largest index seen.
    """
    edges = set()
    top = -1
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected two node indices, got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"line {lineno}: node indices must be integers, got {raw!r}") from None
        if i < 0 or j < 0:
            raise FormatError(f"line {lineno}: negative node index")
        if i == j:
            raise FormatError(f"line {lineno}: self-loop on node {i}")
        if n is not None and max(i, j) >= n:
            raise FormatError(f"line {lineno}: index {max(i, j)} out of range for n={n}")
        edges.add((min(i, j), max(i, j)))
        top = max(top, i, j)
    if n is None:
        if top < 0:
            raise FormatError("edge list is empty and no node count was given")
        n = top + 1
    return _from_edges(n, sorted(edges), name)


def spectral_radius(g: ContactGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SpectralData:
    """Largest adjacency eigenvalue and its l1-normalised Perron vector.

    Power iteration is run on ``A + I`` from the all-ones vector. The unit
    shift keeps the iteration from oscillating on bipartite graphs (rings of
    even length, stars, paths), where ``-lambda_1`` is also an eigenvalue of
    ``A``; it does not change the eigenvectors. The eigenvalue is the Rayleigh
    quotient of the current iterate and convergence is declared once
    ``||A u - lambda u||_inf <= tol``.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    a = g.adjacency
    u = np.full(g.n, 1.0 / g.n)
    lam = 0.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        au = a @ u
        lam = float(u @ au) / float(u @ u)
        residual = float(np.max(np.abs(au - lam * u)))
        if residual <= tol:
            break
        w = au + u
        u = w / w.sum()
    else:
        raise ConvergenceError(
            f"power iteration did not reach residual {tol:g} in {max_iter} iterations "
            f"(last residual {residual:.3e})",
            residual=residual,
            iterations=max_iter,
        )
    connected = g.is_connected()
    if not connected:
        warnings.warn(
            f"{g.name} is disconnected; Perron vector positivity holds only on the dominant component",
            RuntimeWarning,
            stacklevel=2,
        )
    u = u.copy()
    u.setflags(write=False)
    return SpectralData(lambda1=lam, perron=u, iterations=it, residual=residual, connected=connected)
