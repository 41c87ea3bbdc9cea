"""Seeded random graph models and clique perturbations.

All generators are pure functions of their parameters and a 64-bit seed
(or a ``numpy.random.Generator``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from powerlab.errors import GenerationError, GraphError
from powerlab.graph import Graph, _from_pairs, build_graph
from powerlab.seeding import make_rng

MAX_RESTARTS = 10_000
# whole-sample rejection is used when the expected number of attempts is below this
REJECTION_EXPECTED_MAX = 1_000
# double-edge swaps per edge when rejection is out of reach
SWAP_FACTOR = 10
MODELS = ("ER", "SBM", "RR", "RSBM", "RR_c", "RSBM_c")


# ---------------------------------------------------------------------------
# Bernoulli models


def _decode_triangular(t: np.ndarray, N: int):
    """Row-major index of pair ``(i < j)`` among ``N`` items back to ``(i, j)``."""
    t = t.astype(np.int64)
    i = (N - 2 - np.floor(np.sqrt(-8.0 * t + 4.0 * N * (N - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
    row_start = i * N - i * (i + 1) // 2
    # guard against floating error at row boundaries
    low = t < row_start
    i[low] -= 1
    row_start = i * N - i * (i + 1) // 2
    high = t >= row_start + (N - 1 - i)
    i[high] += 1
    row_start = i * N - i * (i + 1) // 2
    j = t - row_start + i + 1
    return i, j


def _bernoulli_within(rng, verts: np.ndarray, p: float):
    N = len(verts)
    total = N * (N - 1) // 2
    if total == 0 or p <= 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    k = rng.binomial(total, min(p, 1.0))
    t = np.sort(rng.choice(total, size=k, replace=False))
    i, j = _decode_triangular(t, N)
    return verts[i], verts[j]


def _bernoulli_across(rng, left: np.ndarray, right: np.ndarray, p: float):
    total = len(left) * len(right)
    if total == 0 or p <= 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    k = rng.binomial(total, min(p, 1.0))
    t = np.sort(rng.choice(total, size=k, replace=False))
    return left[t // len(right)], right[t % len(right)]


def gen_sbm(n: int, a: float, b: float, seed) -> Graph:
    """Two-community SBM: pairs join w.p. ``a/n`` within and ``b/n`` across.

    Each vertex is labeled 1 or 2 independently and uniformly. Edge counts
    per pair class are drawn as binomials and the edges themselves as a
    uniform subset of the class, which is the same law as independent
    Bernoulli trials but costs O(edges) instead of O(n^2).
    """
    if n < 0:
        raise GraphError(f"n must be non-negative, got {n}")
    if not (0 <= b <= n and 0 <= a <= n):
        raise GraphError(f"need 0 <= a, b <= n, got a={a}, b={b}, n={n}")
    rng = make_rng(seed)
    labels = rng.integers(1, 3, size=n).astype(np.int8)
    v1 = np.flatnonzero(labels == 1)
    v2 = np.flatnonzero(labels == 2)
    parts = [
        _bernoulli_within(rng, v1, a / n if n else 0.0),
        _bernoulli_within(rng, v2, a / n if n else 0.0),
        _bernoulli_across(rng, v1, v2, b / n if n else 0.0),
    ]
    u = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    return _from_pairs(n, np.minimum(u, v), np.maximum(u, v), labels)


def gen_er(n: int, d: float, seed) -> Graph:
    """Erdős–Rényi graph with edge probability ``d/n`` (an SBM with ``a = b = d``)."""
    g = gen_sbm(n, d, d, seed)
    return Graph(g.n, g.indptr, g.indices, None)


# ---------------------------------------------------------------------------
# Configuration-model pairing


def _suitable(stubs, edges, forbidden) -> bool:
    verts = sorted(set(stubs))
    for x in range(len(verts)):
        for y in range(x + 1, len(verts)):
            pair = (verts[x], verts[y])
            if pair not in edges and pair not in forbidden:
                return True
    return False


def _try_pairing(rng, stubs: np.ndarray, forbidden):
    edges: set[tuple[int, int]] = set()
    stubs = stubs.copy()
    while stubs.size:
        rng.shuffle(stubs)
        bad = []
        for u, v in stubs.reshape(-1, 2).tolist():
            if u > v:
                u, v = v, u
            if u != v and (u, v) not in edges and (u, v) not in forbidden:
                edges.add((u, v))
            else:
                bad.extend((u, v))
        if not bad:
            break
        if not _suitable(bad, edges, forbidden):
            return None
        stubs = np.asarray(bad, dtype=np.int64)
    return edges


def _try_bipartite(rng, left: np.ndarray, right: np.ndarray, forbidden):
    edges: set[tuple[int, int]] = set()
    left, right = left.copy(), right.copy()
    while left.size:
        rng.shuffle(right)
        bad_l, bad_r = [], []
        for u, v in zip(left.tolist(), right.tolist()):
            pair = (u, v) if u < v else (v, u)
            if pair not in edges and pair not in forbidden:
                edges.add(pair)
            else:
                bad_l.append(u)
                bad_r.append(v)
        if not bad_l:
            break
        if not any(
            ((u, v) if u < v else (v, u)) not in edges and ((u, v) if u < v else (v, u)) not in forbidden
            for u in set(bad_l)
            for v in set(bad_r)
        ):
            return None
        left = np.asarray(bad_l, dtype=np.int64)
        right = np.asarray(bad_r, dtype=np.int64)
    return edges


def _simple_probability(nu_sq_term: float) -> float:
    return math.exp(-nu_sq_term)


def _pair_keys(lo, hi, width):
    return lo * width + hi


def _forbidden_keys(forbidden, width) -> np.ndarray:
    if not forbidden:
        return np.zeros(0, dtype=np.int64)
    arr = np.array(sorted(forbidden), dtype=np.int64)
    return np.sort(_pair_keys(arr[:, 0], arr[:, 1], width))


def _accept(lo, hi, width, forb) -> set | None:
    if np.any(lo == hi):
        return None
    key = _pair_keys(lo, hi, width)
    if np.unique(key).size < key.size:
        return None
    if forb.size and np.isin(key, forb).any():
        return None
    return set(zip(lo.tolist(), hi.tolist()))


def _swap_mix(rng, edges: set, forbidden, bipartite_left=None) -> set:
    """Degree-preserving double-edge swaps; the chain is uniform on simple realizations.

    With ``bipartite_left`` given, only swaps that keep every edge across
    the bipartition are proposed.
    """
    E = sorted(edges)
    m = len(E)
    if m < 2:
        return edges
    steps = SWAP_FACTOR * m
    picks = rng.integers(0, m, size=(steps, 2))
    coins = rng.random(steps) < 0.5
    for (i, j), coin in zip(picks.tolist(), coins.tolist()):
        if i == j:
            continue
        (a, b), (c, d) = E[i], E[j]
        if bipartite_left is not None:
            # keep the left endpoint first so the swap stays across the cut
            a, b = (a, b) if a in bipartite_left else (b, a)
            c, d = (c, d) if c in bipartite_left else (d, c)
            coin = True
        e1, e2 = ((a, d), (c, b)) if coin else ((a, c), (b, d))
        if e1[0] == e1[1] or e2[0] == e2[1]:
            continue
        e1 = e1 if e1[0] < e1[1] else (e1[1], e1[0])
        e2 = e2 if e2[0] < e2[1] else (e2[1], e2[0])
        if e1 == e2 or e1 in edges or e2 in edges or e1 in forbidden or e2 in forbidden:
            continue
        edges.discard(E[i])
        edges.discard(E[j])
        edges.add(e1)
        edges.add(e2)
        E[i], E[j] = e1, e2
    return edges


def pair_degree_sequence(rng, vertices, degrees, forbidden=frozenset(), max_restarts=MAX_RESTARTS):
    """Simple graph on ``vertices`` realizing ``degrees`` by stub pairing.

    When the expected number of whole-sample attempts is affordable the
    pairing is redrawn until it is simple and avoids ``forbidden``, which
    is exactly uniform. Otherwise colliding stubs are re-shuffled among
    themselves and the result is mixed by double-edge swaps.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    stubs = np.repeat(np.asarray(vertices, dtype=np.int64), degrees)
    if stubs.size % 2:
        raise GraphError("degree sum is odd")
    if stubs.size == 0:
        return set()
    nu = float((degrees * (degrees - 1)).sum()) / stubs.size
    if 1.0 / _simple_probability(nu / 2 + nu * nu / 4) <= REJECTION_EXPECTED_MAX:
        width = int(stubs.max()) + 1
        forb = _forbidden_keys(forbidden, width)
        for _ in range(max_restarts):
            p = rng.permutation(stubs).reshape(-1, 2)
            edges = _accept(p.min(axis=1), p.max(axis=1), width, forb)
            if edges is not None:
                return edges
        raise GenerationError(f"no simple pairing after {max_restarts} restarts")
    for _ in range(max_restarts):
        edges = _try_pairing(rng, stubs, forbidden)
        if edges is not None:
            return _swap_mix(rng, edges, forbidden)
    raise GenerationError(f"stub pairing failed after {max_restarts} restarts")


def pair_bipartite(rng, left, left_deg, right, right_deg, forbidden=frozenset(), max_restarts=MAX_RESTARTS):
    """Bipartite analogue of :func:`pair_degree_sequence` (only repeated pairs can collide)."""
    left_deg = np.asarray(left_deg, dtype=np.int64)
    right_deg = np.asarray(right_deg, dtype=np.int64)
    ls = np.repeat(np.asarray(left, dtype=np.int64), left_deg)
    rs = np.repeat(np.asarray(right, dtype=np.int64), right_deg)
    if ls.size != rs.size:
        raise GraphError("bipartite degree sums differ")
    if ls.size == 0:
        return set()
    nu_l = float((left_deg * (left_deg - 1)).sum()) / ls.size
    nu_r = float((right_deg * (right_deg - 1)).sum()) / rs.size
    if 1.0 / _simple_probability(nu_l * nu_r / 2) <= REJECTION_EXPECTED_MAX:
        width = int(max(ls.max(), rs.max())) + 1
        forb = _forbidden_keys(forbidden, width)
        for _ in range(max_restarts):
            shuffled = rng.permutation(rs)
            edges = _accept(np.minimum(ls, shuffled), np.maximum(ls, shuffled), width, forb)
            if edges is not None:
                return edges
        raise GenerationError(f"no simple bipartite pairing after {max_restarts} restarts")
    for _ in range(max_restarts):
        edges = _try_bipartite(rng, ls, rs, forbidden)
        if edges is not None:
            return _swap_mix(rng, edges, forbidden, bipartite_left=set(np.asarray(left).tolist()))
    raise GenerationError(f"bipartite stub pairing failed after {max_restarts} restarts")


def _graph_from_edge_set(n, edges, labels=None) -> Graph:
    if not edges:
        return build_graph(n, [], labels)
    arr = np.array(sorted(edges), dtype=np.int64)
    return _from_pairs(n, arr[:, 0], arr[:, 1], labels)


def _clique_pairs(vertices):
    vs = sorted(int(v) for v in vertices)
    return {(vs[i], vs[j]) for i in range(len(vs)) for j in range(i + 1, len(vs))}


def gen_rr_clique(n: int, d: int, c: int, seed) -> Graph:
    """Random ``d``-regular graph containing a planted ``c``-clique.

    Clique vertices keep ``d - c + 1`` free stubs, all others ``d``; the
    residual degrees are realized by stub pairing that avoids clique pairs.
    """
    if not 0 <= d < max(n, 1):
        raise GraphError(f"need 0 <= d < n, got d={d}, n={n}")
    if (n * d) % 2:
        raise GraphError(f"n*d must be even, got n={n}, d={d}")
    if c < 0 or c > n:
        raise GraphError(f"clique size must be in [0, n], got {c}")
    if c - 1 > d:
        raise GraphError(f"clique size {c} needs degree at least {c - 1}, got d={d}")
    rng = make_rng(seed)
    clique = rng.choice(n, size=c, replace=False) if c else np.zeros(0, np.int64)
    cl = _clique_pairs(clique)
    deg = np.full(n, d, dtype=np.int64)
    if c:
        deg[clique] -= c - 1
    edges = pair_degree_sequence(rng, np.arange(n), deg, forbidden=cl)
    return _graph_from_edge_set(n, edges | cl)


def gen_rr(n: int, d: int, seed) -> Graph:
    """Random ``d``-regular simple graph (same stream as a 0-clique ``RR_c``)."""
    return gen_rr_clique(n, d, 0, seed)


def _check_rsbm(n, a, b):
    if n % 2:
        raise GraphError(f"RSBM needs an even number of vertices, got {n}")
    half = n // 2
    if (half * a) % 2:
        raise GraphError(f"(n/2)*a must be even, got n={n}, a={a}")
    if not 0 <= a < half:
        raise GraphError(f"need 0 <= a < n/2, got a={a}")
    if not 0 <= b <= half:
        raise GraphError(f"need 0 <= b <= n/2, got b={b}")


def gen_rsbm_clique(n: int, a: int, b: int, c: int, seed) -> Graph:
    """Regular SBM with a planted ``c``-clique placed before the partition.

    Within-community clique edges use up the ``a`` budget of their
    endpoints and cross edges the ``b`` budget; a partition that leaves a
    negative residual is redrawn.
    """
    _check_rsbm(n, a, b)
    if c < 0 or c > n:
        raise GraphError(f"clique size must be in [0, n], got {c}")
    if c and c > min(a, b):
        warnings.warn(f"clique size {c} is not small compared with min(a, b) = {min(a, b)}", stacklevel=2)
    rng = make_rng(seed)
    clique = rng.choice(n, size=c, replace=False) if c else np.zeros(0, np.int64)
    cl = _clique_pairs(clique)
    half = n // 2
    for _ in range(MAX_RESTARTS):
        perm = rng.permutation(n)
        labels = np.full(n, 2, dtype=np.int8)
        labels[perm[:half]] = 1
        same = np.zeros(n, dtype=np.int64)
        cross = np.zeros(n, dtype=np.int64)
        for u, v in cl:
            if labels[u] == labels[v]:
                same[u] += 1
                same[v] += 1
            else:
                cross[u] += 1
                cross[v] += 1
        if (same <= a).all() and (cross <= b).all():
            break
    else:
        raise GenerationError("could not place the clique within the community degree budgets")
    x1 = np.flatnonzero(labels == 1)
    x2 = np.flatnonzero(labels == 2)
    edges = set(cl)
    edges |= pair_degree_sequence(rng, x1, a - same[x1], forbidden=cl)
    edges |= pair_degree_sequence(rng, x2, a - same[x2], forbidden=cl)
    edges |= pair_bipartite(rng, x1, b - cross[x1], x2, b - cross[x2], forbidden=cl)
    return _graph_from_edge_set(n, edges, labels)


def gen_rsbm(n: int, a: int, b: int, seed) -> Graph:
    """Regular SBM: ``a``-regular inside each half, ``b``-regular bipartite across."""
    return gen_rsbm_clique(n, a, b, 0, seed)


# ---------------------------------------------------------------------------
# Perturbations


@dataclass(frozen=True)
class Perturbation:
    """Vertex set ``V(H)`` and the pairs inside it whose adjacency is toggled."""

    vertices: tuple[int, ...]
    toggled_edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        vs = tuple(sorted(int(v) for v in self.vertices))
        if len(set(vs)) != len(vs):
            raise GraphError("perturbation vertices must be distinct")
        vset = set(vs)
        toggles = []
        for u, v in self.toggled_edges:
            u, v = (int(u), int(v)) if u < v else (int(v), int(u))
            if u == v:
                raise GraphError(f"cannot toggle a self-loop at {u}")
            if u not in vset or v not in vset:
                raise GraphError(f"toggle ({u}, {v}) leaves the perturbation vertex set")
            toggles.append((u, v))
        if len(set(toggles)) != len(toggles):
            raise GraphError("toggle list repeats a pair")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "toggled_edges", tuple(sorted(toggles)))

    @property
    def c(self) -> int:
        return len(self.vertices)

    def as_graph(self, n: int) -> Graph:
        """The toggle graph ``H`` on ``n`` vertices."""
        return build_graph(n, self.toggled_edges)

    def to_text(self) -> str:
        verts = " ".join(map(str, self.vertices))
        toggles = " ".join(f"{u},{v}" for u, v in self.toggled_edges)
        return f"{self.c}; {verts}; {toggles}\n"

    @classmethod
    def from_text(cls, text: str) -> Perturbation:
        parts = [p.strip() for p in text.strip().split(";")]
        if len(parts) != 3:
            raise GraphError("perturbation block must read 'c; vertices; toggles'")
        c = int(parts[0])
        verts = [int(v) for v in parts[1].split()]
        if len(verts) != c:
            raise GraphError(f"perturbation announces c={c} but lists {len(verts)} vertices")
        toggles = [tuple(int(x) for x in tok.split(",")) for tok in parts[2].split()]
        return cls(tuple(verts), tuple(toggles))


def gen_adversary_clique(g: Graph, c: int, seed, mode: str = "uniform") -> Perturbation:
    """Toggle the missing pairs among ``c`` chosen vertices so they form a clique.

    ``mode="uniform"`` picks the vertices uniformly at random,
    ``mode="targeted"`` picks the ``c`` highest-degree vertices (ties to
    the smaller index).
    """
    if not 0 <= c <= g.n:
        raise GraphError(f"clique size must be in [0, {g.n}], got {c}")
    if mode == "uniform":
        chosen = make_rng(seed).choice(g.n, size=c, replace=False)
    elif mode == "targeted":
        order = np.lexsort((np.arange(g.n), -g.degrees))
        chosen = order[:c]
    else:
        raise ValueError(f"unknown adversary mode {mode!r}")
    chosen = sorted(int(v) for v in chosen)
    missing = [
        (u, v)
        for i, u in enumerate(chosen)
        for v in chosen[i + 1:]
        if not np.any(g.neighbors(u) == v)
    ]
    return Perturbation(tuple(chosen), tuple(missing))


def apply_perturbation(g: Graph, h: Perturbation) -> Graph:
    """``G + H``: symmetric difference of the edge sets on ``h.toggled_edges``."""
    if h.vertices and (h.vertices[0] < 0 or h.vertices[-1] >= g.n):
        raise GraphError(f"perturbation vertices must lie in [0, {g.n})")
    if not h.toggled_edges:
        return g
    edges = {tuple(e) for e in g.edges().tolist()}
    edges ^= set(h.toggled_edges)
    return _graph_from_edge_set(g.n, edges, g.labels)


# ---------------------------------------------------------------------------
# Parameter bundle


@dataclass(frozen=True)
class ModelParams:
    """Model name plus the parameters it reads.

    ``ER``/``RR`` read ``d``; ``SBM``/``RSBM`` read ``a`` and ``b``; the
    ``_c`` variants also read the clique size ``c``.
    """

    model: str
    n: int
    a: float = 0
    b: float = 0
    d: float = 0
    c: int = 0
    seed: int = 0

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.c < 0 or self.c >= self.n:
            raise ValueError(f"c must satisfy 0 <= c < n, got {self.c}")
        if self.model in ("ER", "RR", "RR_c") and self.d < 0:
            raise ValueError(f"d must be non-negative, got {self.d}")
        if self.model in ("RR", "RR_c", "RSBM", "RSBM_c"):
            for name in ("a", "b", "d"):
                val = getattr(self, name)
                if val != int(val):
                    raise ValueError(f"{name} must be an integer for regular models, got {val}")
        if self.model in ("RSBM", "RSBM_c"):
            _check_rsbm(self.n, int(self.a), int(self.b))

    def mean_degree(self) -> float:
        if self.model in ("ER", "RR", "RR_c"):
            return float(self.d)
        if self.model == "SBM":
            return (self.a + self.b) / 2
        return float(self.a + self.b)

    def generate(self, seed=None) -> Graph:
        seed = self.seed if seed is None else seed
        m = self.model
        if m == "ER":
            return gen_er(self.n, self.d, seed)
        if m == "SBM":
            return gen_sbm(self.n, self.a, self.b, seed)
        if m == "RR":
            return gen_rr(self.n, int(self.d), seed)
        if m == "RR_c":
            return gen_rr_clique(self.n, int(self.d), self.c, seed)
        if m == "RSBM":
            return gen_rsbm(self.n, int(self.a), int(self.b), seed)
        if m == "RSBM_c":
            return gen_rsbm_clique(self.n, int(self.a), int(self.b), self.c, seed)
        raise ValueError(f"unknown model {m!r}")


def binomial_sigma(trials: int, p: float) -> float:
    return math.sqrt(trials * p * (1 - p))
