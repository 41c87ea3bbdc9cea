"""Graph powering: ``G^(r)`` joins every pair at distance at most ``r``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from powerlab.errors import HypothesisError
from powerlab.graph import Graph, components, from_csr, girth


@dataclass(frozen=True)
class PoweredGraph:
    base_hash: str
    r: int
    graph: Graph

    def header(self) -> str:
        return f"power r={self.r} of {self.base_hash}"


def ball_matrix(g: Graph, r: int) -> sp.csr_matrix:
    """0/1 matrix of the relation ``dist(x, y) <= r`` (diagonal included).

    Runs a truncated BFS from every vertex simultaneously: each level
    multiplies the current frontier pattern by the adjacency pattern.
    """
    A = g.adjacency_matrix(np.int64)
    A.setdiag(0)
    A.eliminate_zeros()
    ball = sp.identity(g.n, dtype=np.int64, format="csr")
    frontier = ball
    for _ in range(r):
        step = frontier @ A
        step.data[:] = 1
        new = sp.csr_matrix(step - step.multiply(ball))
        new.eliminate_zeros()
        if new.nnz == 0:
            break
        ball = sp.csr_matrix(ball + new)
        frontier = new
    ball.sort_indices()
    return ball


def power_graph(g: Graph, r: int) -> PoweredGraph:
    """The ``r``-th power of ``g`` with a self-loop at every vertex.

    Warns when every component collapses to a clique (``r`` at least the
    diameter), since the power then carries no structure.
    """
    if r < 1:
        raise ValueError(f"power radius must be >= 1, got {r}")
    ball = ball_matrix(g, r)
    _, lab = components(g)
    sizes = np.bincount(lab) if g.n else np.zeros(0, dtype=np.int64)
    if g.n > 1 and ball.nnz == int((sizes.astype(np.int64) ** 2).sum()) and g.num_edges > 0:
        warnings.warn(
            f"r={r} reaches the diameter: every component of the power is complete",
            RuntimeWarning,
            stacklevel=2,
        )
    return PoweredGraph(g.fingerprint, r, from_csr(ball, g.labels))


def _regular_degree(g: Graph) -> int | None:
    deg = g.degrees
    if g.n == 0 or deg.min() != deg.max():
        return None
    return int(deg[0])


def power_poly_matrix(g: Graph, r: int, d: int) -> np.ndarray:
    """``p^(r)(A)`` from ``P_r = A P_{r-1} - (d-1) P_{r-2}``, ``P_0 = I``, ``P_1 = A + I``.

    The recursion reproduces the adjacency of ``G^(r)`` only for a
    ``d``-regular graph of girth greater than ``2r``; both hypotheses are
    checked.
    """
    if r < 1:
        raise ValueError(f"power radius must be >= 1, got {r}")
    if g.has_self_loops:
        raise HypothesisError("graph has self-loops; the recursion needs a simple d-regular graph")
    deg = _regular_degree(g)
    if deg != d:
        raise HypothesisError(f"graph is not {d}-regular (degrees {g.degrees.min()}..{g.degrees.max()})")
    gi = girth(g)
    if gi is not None and gi <= 2 * r:
        raise HypothesisError(f"girth {gi} is not greater than 2r = {2 * r}")
    A = g.adjacency_matrix().toarray()
    prev, cur = np.eye(g.n), A + np.eye(g.n)
    for _ in range(r - 1):
        prev, cur = cur, A @ cur - (d - 1) * prev
    return cur


def power_poly(d: int, r: int, x):
    """Scalar (or elementwise) ``p^(r)(x)`` by the same three-term recursion."""
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x + 1.0
    if r == 0:
        return prev
    for _ in range(r - 1):
        prev, cur = cur, x * cur - (d - 1) * prev
    return cur
