"""Immutable sparse graphs and BFS-based metrics.

A :class:`Graph` stores a symmetric CSR adjacency structure: ``indices``
holds the sorted neighbor list of every vertex back to back and ``indptr``
delimits them. A self-loop ``(v, v)`` appears once in the list of ``v``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from powerlab.errors import DisconnectedGraphError, GraphError

#: Sentinel distance for vertices beyond the BFS cap (or unreachable).
BEYOND = -1


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph without repeated edges, optionally with self-loops.

    Build instances with :func:`build_graph`; the constructor trusts its
    arguments.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if self.labels is not None:
            self.labels.setflags(write=False)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def has_self_loops(self) -> bool:
        rows = np.repeat(np.arange(self.n), self.degrees)
        return bool(np.any(rows == self.indices))

    @cached_property
    def num_edges(self) -> int:
        """Number of undirected edges, self-loops counted once."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        loops = int(np.count_nonzero(rows == self.indices))
        return (len(self.indices) - loops) // 2 + loops

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Per-vertex sorted neighbor tuples."""
        ind = self.indices.tolist()
        ptr = self.indptr.tolist()
        return tuple(tuple(ind[ptr[v]:ptr[v + 1]]) for v in range(self.n))

    def edges(self) -> np.ndarray:
        """Normalized ``(u, v)`` pairs with ``u <= v``, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        keep = rows <= self.indices
        return np.column_stack([rows[keep], self.indices[keep]]).astype(np.int64)

    def adjacency_matrix(self, dtype=np.float64) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(np.ascontiguousarray(self.edges()).tobytes())
        return h.hexdigest()[:16]

    def with_labels(self, labels) -> Graph:
        return Graph(self.n, self.indptr, self.indices, _check_labels(labels, self.n))

    def subgraph(self, vertices: Sequence[int]) -> Graph:
        """Induced subgraph, vertices renumbered in the given order."""
        vertices = np.asarray(vertices, dtype=np.int64)
        A = self.adjacency_matrix(np.int8)[vertices][:, vertices].tocsr()
        A.sort_indices()
        labels = None if self.labels is None else self.labels[vertices]
        return Graph(len(vertices), A.indptr.astype(np.int64), A.indices.astype(np.int64), labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None
            and other.labels is not None
            and np.array_equal(self.labels, other.labels)
        )
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and same_labels
        )

    __hash__ = object.__hash__

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges}, loops={self.has_self_loops})"


def _check_labels(labels, n):
    if labels is None:
        return None
    labels = np.asarray(labels, dtype=np.int8)
    if labels.shape != (n,):
        raise GraphError(f"expected {n} labels, got {labels.shape[0] if labels.ndim else 0}")
    bad = np.flatnonzero((labels != 1) & (labels != 2))
    if bad.size:
        raise GraphError(f"label of vertex {bad[0]} is {labels[bad[0]]}, must be 1 or 2")
    return labels.copy()


def build_graph(n: int, edges: Iterable[Sequence[int]], labels=None) -> Graph:
    """Validate an edge list and return the corresponding :class:`Graph`.

    Pairs are normalized to ``(min, max)``; a pair that repeats after
    normalization is rejected, as is any endpoint outside ``range(n)``.
    """
    if n < 0:
        raise GraphError(f"vertex count must be non-negative, got {n}")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphError("edges must be a sequence of vertex pairs")
    out = np.flatnonzero((arr < 0).any(axis=1) | (arr >= n).any(axis=1))
    if out.size:
        u, v = arr[out[0]]
        raise GraphError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    key = lo * max(n, 1) + hi
    order = np.argsort(key, kind="stable")
    dup = np.flatnonzero(np.diff(key[order]) == 0)
    if dup.size:
        i = order[dup[0] + 1]
        raise GraphError(f"duplicate edge ({lo[i]}, {hi[i]})")
    return _from_pairs(n, lo, hi, _check_labels(labels, n))


def _from_pairs(n, lo, hi, labels=None) -> Graph:
    """Assemble CSR from normalized, duplicate-free pairs (no validation)."""
    loop = lo == hi
    rows = np.concatenate([lo, hi[~loop]])
    cols = np.concatenate([hi, lo[~loop]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return Graph(n, indptr, cols.astype(np.int64), labels)


def from_csr(A: sp.spmatrix, labels=None) -> Graph:
    """Graph from a symmetric sparse pattern; stored values are ignored."""
    A = sp.csr_matrix(A, copy=True)
    A.eliminate_zeros()
    A.sort_indices()
    return Graph(A.shape[0], A.indptr.astype(np.int64), A.indices.astype(np.int64), labels)


def _expand(g: Graph, frontier: np.ndarray) -> np.ndarray:
    """All neighbors (with repeats) of the vertices in ``frontier``."""
    starts = g.indptr[frontier]
    counts = g.indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offsets = np.repeat(starts - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    return g.indices[offsets + np.arange(total)]


def bfs_distances(g: Graph, source, cap: int | None = None) -> np.ndarray:
    """Distances from ``source`` (an int or a collection of sources).

    Entries farther than ``cap`` or unreachable hold :data:`BEYOND`.
    """
    sources = np.atleast_1d(np.asarray(source, dtype=np.int64))
    if sources.size == 0 or sources.min() < 0 or sources.max() >= g.n:
        raise GraphError(f"source {source} outside [0, {g.n})")
    dist = np.full(g.n, BEYOND, dtype=np.int64)
    dist[sources] = 0
    frontier = np.unique(sources)
    level = 0
    while frontier.size and (cap is None or level < cap):
        level += 1
        nxt = np.unique(_expand(g, frontier))
        nxt = nxt[dist[nxt] == BEYOND]
        dist[nxt] = level
        frontier = nxt
    return dist


def components(g: Graph) -> tuple[int, np.ndarray]:
    return connected_components(g.adjacency_matrix(np.int8), directed=False)


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on the largest connected component and its vertex ids.

    Ties between equally large components go to the one containing the
    smallest vertex.
    """
    ncomp, lab = components(g)
    if ncomp <= 1:
        return g, np.arange(g.n)
    sizes = np.bincount(lab)
    idx = np.flatnonzero(lab == int(np.argmax(sizes)))
    return g.subgraph(idx), idx


def _require_connected(g: Graph):
    ncomp, lab = components(g)
    if ncomp > 1:
        reps = [int(np.flatnonzero(lab == c)[0]) for c in range(2)]
        raise DisconnectedGraphError(
            f"graph is disconnected: vertices {reps[0]} and {reps[1]} lie in different components",
            reps,
        )


def diameter(g: Graph, chunk: int = 512) -> int:
    """Exact diameter by batched BFS: a block of sources advances one level per sparse product."""
    if g.n == 0:
        raise GraphError("diameter of the empty graph is undefined")
    _require_connected(g)
    A = g.adjacency_matrix(np.float32)
    best = 0
    for start in range(0, g.n, chunk):
        src = np.arange(start, min(g.n, start + chunk))
        reached = np.zeros((g.n, len(src)), dtype=bool)
        reached[src, np.arange(len(src))] = True
        frontier = reached.astype(np.float32)
        level = 0
        while True:
            nxt = (A @ frontier > 0) & ~reached
            if not nxt.any():
                break
            level += 1
            reached |= nxt
            frontier = nxt.astype(np.float32)
        best = max(best, level)
    return best


def girth(g: Graph) -> int | None:
    """Length of the shortest cycle, ``1`` for a self-loop, ``None`` if acyclic."""
    if g.has_self_loops:
        return 1
    adj = g.adjacency
    best = math.inf
    for root in range(g.n):
        if not adj[root]:
            continue
        dist = {root: 0}
        parent = {root: -1}
        queue = [root]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            du = dist[u]
            if 2 * du >= best:
                break
            for w in adj[u]:
                if w not in dist:
                    dist[w] = du + 1
                    parent[w] = u
                    queue.append(w)
                elif w != parent[u]:
                    best = min(best, du + dist[w] + 1)
        if best == 3:
            break
    return None if best == math.inf else int(best)


def sphere_matrices(g: Graph, r: int) -> list[sp.csr_matrix]:
    """Sparse 0/1 matrices ``S[i][x, v] = 1`` iff ``dist(x, v) == i``, ``i = 0..r``.

    Computed by a level-synchronous BFS from all sources at once.
    """
    A = g.adjacency_matrix(np.int64)
    A.setdiag(0)
    A.eliminate_zeros()
    S = [sp.identity(g.n, dtype=np.int64, format="csr")]
    seen = S[0].copy()
    for _ in range(r):
        nxt = S[-1] @ A
        nxt.data[:] = 1
        nxt = nxt - nxt.multiply(seen)
        nxt = sp.csr_matrix(nxt)
        nxt.eliminate_zeros()
        seen = (seen + nxt).tocsr()
        S.append(nxt)
    return S


@dataclass(frozen=True)
class DeltaProfile:
    """Sphere-growth profile ``delta[0..r]`` and its aggregate ``d_hat``."""

    r: int
    delta: tuple[int, ...]
    d_hat: float

    @classmethod
    def from_delta(cls, delta: Sequence[int]) -> DeltaProfile:
        delta = tuple(int(x) for x in delta)
        r = len(delta) - 1
        if r < 1:
            raise ValueError("profile needs at least delta[0] and delta[1]")
        return cls(r, delta, d_hat_from_delta(delta))

    def to_dict(self):
        return {"r": self.r, "delta": list(self.delta), "d_hat": self.d_hat}


def d_hat_from_delta(delta: Sequence[int]) -> float:
    r = len(delta) - 1
    s = sum(math.sqrt(delta[i] * delta[r - i]) for i in range(r + 1))
    return (s / (r + 1)) ** (2.0 / r)


def delta_profile(g: Graph, r: int, max_chunk_nnz: int = 4_000_000) -> DeltaProfile:
    """Minimum over oriented edges ``(x, y)`` of ``|{v : d(x,v)=i, d(y,v)>=i}|``.

    Both orientations of every non-loop edge are considered. Because
    ``d(y, v) >= d(x, v) - 1`` on an edge, the count equals
    ``|S_i(x)| - |S_i(x) ∩ S_{i-1}(y)|``.
    """
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    e = g.edges()
    e = e[e[:, 0] != e[:, 1]]
    if len(e) == 0:
        raise GraphError("delta profile needs at least one non-loop edge")
    xs = np.concatenate([e[:, 0], e[:, 1]])
    ys = np.concatenate([e[:, 1], e[:, 0]])
    S = sphere_matrices(g, r)
    delta = [1]
    for i in range(1, r + 1):
        sizes = np.diff(S[i].indptr)
        per_row = max(1, int(sizes.max()))
        step = max(1, max_chunk_nnz // per_row)
        best = None
        for lo in range(0, len(xs), step):
            bx, by = xs[lo:lo + step], ys[lo:lo + step]
            inter = np.asarray(S[i][bx].multiply(S[i - 1][by]).sum(axis=1)).ravel()
            cnt = int((sizes[bx] - inter).min())
            best = cnt if best is None else min(best, cnt)
        delta.append(best)
    return DeltaProfile.from_delta(delta)


def max_power_degree(g: Graph, subset: Iterable[int], i: int) -> int:
    """Largest ``|{w : 1 <= dist(v, w) <= i}|`` over ``v`` in ``subset``.

    ``i = 0`` returns 1 by convention (a vertex reaches only itself).
    """
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    if i < 0:
        raise ValueError(f"radius must be >= 0, got {i}")
    if i == 0:
        return 1
    return max(int(np.count_nonzero(bfs_distances(g, v, cap=i) > 0)) for v in subset)
