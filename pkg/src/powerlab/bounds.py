"""Executable spectral bounds and walk-counting arguments for graph powers.

Walk counts and combinatorial sums are exact Python integers; floating
point appears only when a count is turned into a spectral estimate.
"""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from powerlab.errors import HypothesisError, SizeGuardError
from powerlab.graph import (
    DeltaProfile,
    Graph,
    build_graph,
    delta_profile,
    diameter,
    max_power_degree,
)
from powerlab.models import Perturbation
from powerlab.powering import power_graph

MAX_SEQUENCES = 10**6
MAX_TREE_VERTICES = 10**6
WALK_WORK_LIMIT = 5 * 10**7


@dataclass(frozen=True)
class BoundReport:
    bound_name: str
    inputs: dict
    value: float
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"bound_name": self.bound_name, "inputs": self.inputs, "value": self.value, "witness": self.witness}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, Fraction):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _profile(profile) -> tuple[int, ...]:
    if isinstance(profile, DeltaProfile):
        return profile.delta
    return tuple(int(x) for x in profile)


# ---------------------------------------------------------------------------
# Powered Alon-Boppana bound


def alon_boppana_bound(g: Graph, r: int) -> BoundReport:
    """``(r + 1) * d_hat_r ** (r / 2)`` from the sphere-growth profile.

    The witness flags whether the diameter exceeds ``2r``; below that no
    walk length is admissible in the walk-count argument and the bound
    need not bind.
    """
    prof = delta_profile(g, r)
    value = (r + 1) * prof.d_hat ** (r / 2)
    try:
        D = diameter(g)
    except ValueError:
        D = None
    binding = D is not None and D > 2 * r
    witness = {"delta": list(prof.delta), "d_hat": prof.d_hat, "diameter": D, "diameter_large_enough": binding}
    if not binding:
        witness["note"] = "diameter too small for the bound to bind"
    return BoundReport("alon_boppana", {"r": r, "n": g.n}, float(value), witness)


# ---------------------------------------------------------------------------
# Closed walk counts in the power


@dataclass(frozen=True)
class WalkCountTable:
    """``t[2k]``: fewest closed ``2k``-walks in ``G^(r)`` at any vertex, with the vertex."""

    r: int
    k_max: int
    t: dict[int, int]
    argmin: dict[int, int]
    include_loops: bool = True

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "k_max": self.k_max,
            "include_loops": self.include_loops,
            "t": {str(k): str(v) for k, v in self.t.items()},
            "argmin": {str(k): v for k, v in self.argmin.items()},
        }


def _powered_int(g: Graph, r: int) -> sp.csr_matrix:
    with warnings.catch_warnings():
        # a complete power is still a valid input for walk counting
        warnings.simplefilter("ignore", RuntimeWarning)
        return power_graph(g, r).graph.adjacency_matrix(np.int64)


def _row_square_sums(P: sp.csr_matrix, exact: bool) -> list[int]:
    if not exact:
        return [int(x) for x in np.asarray(P.multiply(P).sum(axis=1)).ravel()]
    data = np.asarray(P.data, dtype=object)
    sq = data * data
    out = []
    for i in range(P.shape[0]):
        lo, hi = P.indptr[i], P.indptr[i + 1]
        out.append(int(sq[lo:hi].sum()) if hi > lo else 0)
    return out


def closed_walk_counts(g: Graph, r: int, k_max: int, include_loops: bool = True) -> WalkCountTable:
    """Exact ``min_x [(A^(r))^{2k}]_{xx}`` for ``k = 1..k_max``.

    Uses ``[M^{2k}]_{xx} = sum_y ([M^k]_{xy})^2`` for symmetric ``M``.
    ``include_loops`` keeps the unit diagonal of the power.
    """
    if r < 1 or not 1 <= k_max <= 8:
        raise ValueError(f"need r >= 1 and 1 <= k_max <= 8, got r={r}, k_max={k_max}")
    M = sp.csr_matrix(_powered_int(g, r))
    if not include_loops:
        M.setdiag(0)
        M.eliminate_zeros()
    n = g.n
    deg = int(np.diff(M.indptr).max()) if n else 0
    if n * min(n, deg**k_max) > WALK_WORK_LIMIT:
        raise SizeGuardError(f"walk counting on n={n} with power degree {deg} up to k={k_max} is too large")
    big = deg > 1 and k_max * math.log2(deg) >= 62
    if big:
        # object arithmetic keeps every entry exact
        if n > 400:
            raise SizeGuardError("walk counts overflow 64 bits on a graph too large for exact object arithmetic")
        Md = M.toarray().astype(object)
        Pk = np.identity(n, dtype=object)
    t, arg = {0: 1}, {0: 0}
    P = sp.identity(n, dtype=np.int64, format="csr")
    for k in range(1, k_max + 1):
        if big:
            Pk = Pk.dot(Md)
            diag = [int(sum(v * v for v in row)) for row in Pk]
        else:
            P = sp.csr_matrix(P @ M)
            diag = _row_square_sums(P, exact=2 * k * math.log2(max(deg, 2)) >= 62)
        x = int(np.argmin(np.asarray(diag, dtype=object))) if diag else 0
        t[2 * k] = int(diag[x]) if diag else 0
        arg[2 * k] = x
    return WalkCountTable(r, k_max, t, arg, include_loops)


def closed_walk_diagonal(g: Graph, r: int, k: int, include_loops: bool = True) -> list[int]:
    """Per-vertex ``[(A^(r))^{2k}]_{xx}`` as exact integers (small graphs)."""
    M = _powered_int(g, r).toarray().astype(object)
    if not include_loops:
        np.fill_diagonal(M, 0)
    P = np.identity(g.n, dtype=object)
    for _ in range(k):
        P = P.dot(M)
    return [int(sum(v * v for v in row)) for row in P]


def default_walk_k(D: int, r: int) -> int:
    return max(1, (math.ceil(D / r) - 1) // 2)


def lambda2_walk_lower_bound(g: Graph, r: int, k: int | None = None) -> BoundReport:
    """``(t_{2k}^{(r)})^{1/(2k)}``, a lower bound on ``lambda_2(G^(r))`` when ``2k < ceil(D / r)``."""
    D = diameter(g)
    limit = math.ceil(D / r)
    if k is None:
        k = default_walk_k(D, r)
    if k < 1 or 2 * k >= limit:
        raise HypothesisError(f"need 2k < ceil(diameter / r) = {limit}, got 2k = {2 * k}")
    table = closed_walk_counts(g, r, k)
    t = table.t[2 * k]
    value = float(t) ** (1.0 / (2 * k))
    return BoundReport(
        "lambda2_walk", {"r": r, "k": k}, value, {"t": t, "vertex": table.argmin[2 * k], "diameter": D}
    )


# ---------------------------------------------------------------------------
# Length change sequences


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def multinomial(total: int, parts: Sequence[int]) -> int:
    out, left = 1, total
    for p in parts:
        out *= math.comb(left, p)
        left -= p
    return out


def _classes(r: int) -> list[int]:
    """Positive length-change classes: odd ``j`` for odd ``r``, even ``j > 0`` for even ``r``."""
    return list(range(1 if r % 2 else 2, r + 1, 2))


@dataclass(frozen=True)
class LengthChangeSequence:
    r: int
    entries: tuple[int, ...]

    def __post_init__(self):
        r, p = self.r, self.entries
        if len(p) < 2 or len(p) % 2:
            raise ValueError("a sequence has even length at least 2")
        if any(abs(x) > r or (x + r) % 2 for x in p):
            raise ValueError(f"entries must lie in {{-r, -r+2, ..., r}} for r={r}")
        if p[0] != r or p[-1] != -r:
            raise ValueError("sequence must start with r and end with -r")
        run = 0
        for x in p[1:-1]:
            run += x
            if run < 0:
                raise ValueError("an interior partial sum is negative")
        if sum(p) != 0:
            raise ValueError("entries must sum to zero")

    @property
    def move_types(self) -> tuple[int, ...]:
        return tuple((self.r + x) // 2 for x in self.entries)

    @property
    def lengths(self) -> tuple[int, ...]:
        """Walk lengths after each move."""
        out, cur = [], 0
        for x in self.entries:
            cur += x
            out.append(cur)
        return tuple(out)

    def is_restricted(self) -> bool:
        """Each class ``{j, -j}`` of the interior forms a Dyck word; for even ``r`` zeros are free."""
        interior = self.entries[1:-1]
        for j in _classes(self.r):
            h = 0
            for x in interior:
                if x == j:
                    h += 1
                elif x == -j:
                    h -= 1
                    if h < 0:
                        return False
            if h:
                return False
        if self.r % 2 and 0 in interior:
            return False
        return True

    def weight(self, delta: Sequence[int]) -> int:
        out = 1
        for m in self.move_types:
            out *= int(delta[m])
        return out


def _restricted_sum(r: int, k: int, pair_weight, stay_weight) -> int:
    """Sum over restricted interiors of ``multinomial * prod C_{n_j} * weights``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    L = 2 * k - 2
    classes = _classes(r)
    total = 0
    zero_choices = range(0, L + 1, 2) if r % 2 == 0 else (0,)
    for n0 in zero_choices:
        rest = (L - n0) // 2
        for ns in _compositions(rest, len(classes)):
            term = multinomial(L, [n0] + [2 * x for x in ns])
            for j, nj in zip(classes, ns):
                term *= catalan(nj) * pair_weight(j) ** nj
            if n0:
                term *= stay_weight() ** n0
            total += term
    return total


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def count_restricted_sequences(r: int, k: int) -> int:
    """Number of restricted length change sequences of length ``2k``."""
    return _restricted_sum(r, k, lambda j: 1, lambda: 1)


def tree_like_lower_bound(profile, r: int, k: int, include_endpoints: bool = False) -> int:
    """Weighted count of restricted sequences, a lower bound on closed ``2k``-walks.

    Odd ``r`` sums, over ``n_1 + n_3 + ... + n_r = k - 1``, the multinomial
    ``(2k-2; 2n_1, 2n_3, ...)`` times ``prod C_{n_j} (delta[(r+j)/2] delta[(r-j)/2])^{n_j}``.
    Even ``r`` adds ``n_0`` moves of type ``r/2``, each weighted by
    ``delta[r/2]``. The opening and closing moves are left out, as in the
    displayed count; ``include_endpoints`` multiplies their factor
    ``delta[r] * delta[0]`` back in.
    """
    delta = _profile(profile)
    if len(delta) < r + 1:
        raise ValueError(f"profile has {len(delta)} entries, need r + 1 = {r + 1}")
    if r < 1 or k < 1:
        raise ValueError(f"need r >= 1 and k >= 1, got r={r}, k={k}")
    value = _restricted_sum(
        r,
        k,
        lambda j: delta[(r + j) // 2] * delta[(r - j) // 2],
        lambda: delta[r // 2],
    )
    if include_endpoints:
        value *= delta[r] * delta[0]
    return value


def enumerate_restricted_sequences(r: int, k: int) -> list[LengthChangeSequence]:
    """All restricted length change sequences of length ``2k``."""
    if r < 1 or k < 1:
        raise ValueError(f"need r >= 1 and k >= 1, got r={r}, k={k}")
    expected = count_restricted_sequences(r, k)
    if expected > MAX_SEQUENCES:
        raise SizeGuardError(f"{expected} sequences exceed the enumeration limit {MAX_SEQUENCES}")
    L = 2 * k - 2
    steps = [0] if r % 2 == 0 else []
    for j in _classes(r):
        steps += [j, -j]
    index = {j: i for i, j in enumerate(_classes(r))}
    out = []

    def rec(prefix, open_counts, left):
        if left == 0:
            if not any(open_counts):
                out.append(LengthChangeSequence(r, (r, *prefix, -r)))
            return
        if sum(open_counts) > left:
            return
        for s in steps:
            if s == 0:
                rec(prefix + [0], open_counts, left - 1)
                continue
            i = index[abs(s)]
            if s < 0 and open_counts[i] == 0:
                continue
            oc = list(open_counts)
            oc[i] += 1 if s > 0 else -1
            rec(prefix + [s], oc, left - 1)

    rec([], [0] * len(index), L)
    return out


# ---------------------------------------------------------------------------
# Tree-like walk oracle


@dataclass(frozen=True)
class OracleResult:
    count: int
    distinct_endpoint_walks: int

    @property
    def injective(self) -> bool:
        return self.count == self.distinct_endpoint_walks


def _all_distances(g: Graph) -> np.ndarray:
    from scipy.sparse.csgraph import shortest_path

    D = shortest_path(g.adjacency_matrix(), unweighted=True, directed=False)
    D[np.isinf(D)] = -1
    return D.astype(np.int64)


def tree_like_walk_oracle(
    g: Graph, x: int, r: int, k: int, canonical_rule: str = "lex", max_states: int = MAX_SEQUENCES
) -> OracleResult:
    """Count sequences of ``r``-canonically constructed walks of length ``2k`` at ``x``.

    Walks are built by moves of type ``m``: drop the last ``r - m``
    vertices, leaving ``... v_{m-1}, v_m``, then append the canonical path
    from ``v_m`` to a vertex ``y`` with ``d(v_m, y) = m`` and
    ``d(v_{m-1}, y) >= m``. Canonical paths are the lexicographically
    smallest shortest paths. The result also reports how many distinct
    endpoint walks arise, so injectivity of the endpoint map can be checked.
    """
    if canonical_rule != "lex":
        raise ValueError(f"unknown canonical rule {canonical_rule!r}")
    if g.n > 60 or k > 4:
        raise SizeGuardError("the oracle is meant for graphs with at most 60 vertices and k <= 4")
    if g.has_self_loops:
        raise ValueError("oracle needs a simple graph")
    dist = _all_distances(g)
    nbrs = [sorted(int(u) for u in g.neighbors(v)) for v in range(g.n)]

    @lru_cache(maxsize=None)
    def canon(v: int, w: int) -> tuple[int, ...]:
        path = [v]
        while path[-1] != w:
            cur = path[-1]
            need = dist[cur, w] - 1
            path.append(next(u for u in nbrs[cur] if dist[u, w] == need))
        return tuple(path[1:])

    spheres = {}
    for v in range(g.n):
        for m in range(r + 1):
            spheres[v, m] = [int(y) for y in np.flatnonzero(dist[v] == m)]

    total = 2 * k
    count = 0
    endpoints = set()
    states = 0

    def rec(walk: tuple[int, ...], i: int, trail: tuple[int, ...]):
        nonlocal count, states
        states += 1
        if states > max_states:
            raise SizeGuardError(f"oracle explored more than {max_states} states")
        if i == total:
            if len(walk) == 1:
                count += 1
                endpoints.add(trail)
            return
        L = len(walk) - 1
        if i == 0:
            moves = [(r, walk, None)]
        else:
            moves = []
            for m in range(r + 1):
                keep = walk[: L - r + m + 1]
                prev = keep[-2] if m >= 1 else None
                moves.append((m, keep, prev))
        for m, keep, prev in moves:
            vm = keep[-1]
            newlen = len(keep) - 1 + m
            if 0 < i + 1 < total and newlen < r:
                continue
            if newlen > r * (total - i - 1):
                continue
            for y in spheres[vm, m]:
                if prev is not None and m >= 1 and dist[prev, y] < m:
                    continue
                nxt = keep + (canon(vm, y) if m else ())
                rec(nxt, i + 1, trail + (y,))

    rec((int(x),), 0, (int(x),))
    return OracleResult(count, len(endpoints))


# ---------------------------------------------------------------------------
# Even-partition inequality


def even_partition_bound(xs: Sequence, two_n: int) -> tuple[Fraction, Fraction]:
    """``(sum over even compositions, (sum xs)^{2n} / 2^{k-1})`` in exact arithmetic."""
    if two_n < 0 or two_n % 2:
        raise ValueError(f"two_n must be a non-negative even integer, got {two_n}")
    xs = [Fraction(x) for x in xs]
    if not xs:
        raise ValueError("need at least one value")
    if any(x < 0 for x in xs):
        raise ValueError("values must be non-negative")
    k, n = len(xs), two_n // 2
    lhs = Fraction(0)
    for ms in _compositions(n, k):
        term = Fraction(multinomial(two_n, [2 * m for m in ms]))
        for x, m in zip(xs, ms):
            term *= x ** (2 * m)
        lhs += term
    rhs = sum(xs, Fraction(0)) ** two_n / 2 ** (k - 1)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Girth closed form


def _chebyshev_u(n: int, c: float) -> float:
    if n < 0:
        return 0.0
    a, b = 1.0, 2.0 * c
    if n == 0:
        return a
    for _ in range(n - 1):
        a, b = b, 2.0 * c * b - a
    return b


def girth_poly_bound(d: int, r: int, x: float) -> float:
    """``p^(r)(x)`` through the angle ``theta = arccos(x / (2 sqrt(d - 1)))``.

    Near ``sin(theta) = 0`` the ratio ``sin(r theta) / sin(theta)`` is
    evaluated as the Chebyshev polynomial ``U_{r-1}(cos theta)``.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    s = math.sqrt(d - 1)
    if abs(x) >= 2 * s:
        raise ValueError(f"|x| must be < 2 sqrt(d - 1) = {2 * s:.6g}, got {x}")
    c = x / (2 * s)
    theta = math.acos(c)
    st = math.sin(theta)
    ratio = math.sin(r * theta) / st if st > 1e-6 else _chebyshev_u(r - 1, c)
    return (d - 1) ** (r / 2) * (math.cos(r * theta) + ratio / s + c * ratio)


def girth_poly_envelope(d: int, r: int) -> float:
    """``(d-1)^{r/2} (1 + r / sqrt(d-1) + r)``, the bound on ``|p^(r)|`` inside the bulk."""
    return (d - 1) ** (r / 2) * (1 + r / math.sqrt(d - 1) + r)


# ---------------------------------------------------------------------------
# Perturbation bound


def perturbation_power_bound(g: Graph, h: Perturbation, r: int) -> BoundReport:
    """``sum_{q<r} c * max_{0<=i<=q} sqrt(D^(i) D^(q-i))`` with ``D^(i)`` the largest
    ``G^(i)`` degree over the perturbed vertices (``D^(0) = 1``)."""
    if h.c < 1:
        raise ValueError("perturbation must touch at least one vertex")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    D = [max_power_degree(g, h.vertices, i) for i in range(r)]
    total = 0.0
    for q in range(r):
        total += h.c * max(math.sqrt(D[i] * D[q - i]) for i in range(q + 1))
    return BoundReport("perturbation_power", {"r": r, "c": h.c}, total, {"D": D})


# ---------------------------------------------------------------------------
# Trees joined by a clique


def tdc_size(d: int, c: int, depth: int) -> int:
    return c * sum((d - 1) ** l for l in range(depth + 1))


def tdc_truncated(d: int, c: int, depth: int) -> Graph:
    """``c`` roots forming a clique, each the root of a ``(d-1)``-ary tree of the given depth.

    Vertices are numbered copy by copy in breadth-first order.
    """
    if d < 2 or c < 2 or depth < 1:
        raise ValueError(f"need d >= 2, c >= 2, depth >= 1, got d={d}, c={c}, depth={depth}")
    per = tdc_size(d, 1, depth)
    if c * per > MAX_TREE_VERTICES:
        raise SizeGuardError(f"truncated tree has {c * per} vertices, over the limit {MAX_TREE_VERTICES}")
    b = d - 1
    # children of local vertex v are b*v+1 .. b*v+b (complete b-ary numbering)
    parents = np.arange(1, per) - 1
    parents //= b
    child = np.arange(1, per)
    offs = np.arange(c) * per
    u = (parents[None, :] + offs[:, None]).ravel()
    v = (child[None, :] + offs[:, None]).ravel()
    roots = offs
    iu, ju = np.triu_indices(c, 1)
    u = np.concatenate([u, roots[iu]])
    v = np.concatenate([v, roots[ju]])
    return build_graph(c * per, np.stack([u, v], axis=1))


def tdc_level_quotient(d: int, c: int, depth: int, r: int) -> np.ndarray:
    """Symmetrized level quotient of the truncated tree's ``r``-th power (loops kept).

    All vertices on one level are equivalent under automorphisms, so the
    levels form an equitable partition and the quotient shares the top
    eigenvalue of the full powered graph.
    """
    b = d - 1
    L = depth + 1
    Q = np.zeros((L, L))
    for l in range(L):
        for lp in range(L):
            cnt = 0
            if lp >= l and lp - l <= r:
                cnt += b ** (lp - l)
            for j in range(min(l, lp + 1)):
                if (l - j) + (lp - j) > r:
                    continue
                cnt += 1 if lp == j else (d - 2) * b ** (lp - j - 1)
            if l + 1 + lp <= r:
                cnt += (c - 1) * b**lp
            Q[l, lp] = cnt
    N = np.array([float(b**l) for l in range(L)])
    s = np.sqrt(N)
    return Q * s[:, None] / s[None, :]


def tdc_lambda1(d: int, c: int, depth: int, r: int) -> float:
    """Top eigenvalue of the ``r``-th power of the truncated tree-with-clique."""
    S = tdc_level_quotient(d, c, depth, r)
    return float(np.linalg.eigvalsh((S + S.T) / 2)[-1])


def tdc_band(d: int, c: int, r: int, slack: float = 3.0) -> tuple[float, float]:
    """``[max((r+1) sqrt d, c), c + (r+1) sqrt d] * sqrt(d)^{r-1}``, widened by ``slack``."""
    sd = math.sqrt(d)
    scale = sd ** (r - 1)
    return max((r + 1) * sd, c) * scale / slack, (c + (r + 1) * sd) * scale * slack


def tdc_report(d: int, c: int, depth: int, r: int, slack: float = 3.0) -> BoundReport:
    lam = tdc_lambda1(d, c, depth, r)
    lo, hi = tdc_band(d, c, r, slack)
    return BoundReport(
        "tdc_band",
        {"d": d, "c": c, "depth": depth, "r": r, "slack": slack},
        lam,
        {"lower": lo, "upper": hi, "inside": bool(lo <= lam <= hi)},
    )
