"""Independent reference implementations used only by the tests.

Everything here is deliberately naive: dense matrices, Floyd-Warshall,
explicit directed-edge operators and brute-force enumeration.
"""

from itertools import product

import numpy as np


def dense_adjacency(g):
    A = np.zeros((g.n, g.n), dtype=np.int64)
    for u, v in g.edges().tolist():
        A[u, v] = A[v, u] = 1
    return A


def floyd_warshall(g):
    n = g.n
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0)
    for u, v in g.edges().tolist():
        if u != v:
            D[u, v] = D[v, u] = 1
    for k in range(n):
        D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    return D


def power_adjacency(g, r):
    """Dense 0/1 adjacency of the r-th power with unit diagonal."""
    return (floyd_warshall(g) <= r).astype(np.int64)


def nonbacktracking_matrix(g):
    darts = [(u, v) for u, v in g.edges().tolist() if u != v]
    darts += [(v, u) for u, v in darts]
    index = {e: i for i, e in enumerate(darts)}
    B = np.zeros((len(darts), len(darts)))
    for (a, b), i in index.items():
        for (c, d), j in index.items():
            if b == c and a != d:
                B[i, j] = 1
    return B


def delta_brute(g, r):
    D = floyd_warshall(g)
    out = [1]
    for i in range(1, r + 1):
        best = None
        for u, v in g.edges().tolist():
            if u == v:
                continue
            for x, y in ((u, v), (v, u)):
                cnt = int(np.sum((D[x] == i) & (D[y] >= i)))
                best = cnt if best is None else min(best, cnt)
        out.append(best)
    return out


def closed_walks_brute(M, k):
    """Diagonal of M^k with exact integer arithmetic."""
    P = np.identity(len(M), dtype=object)
    Mo = np.asarray(M, dtype=object)
    for _ in range(k):
        P = P.dot(Mo)
    return [int(P[i, i]) for i in range(len(M))]


def restricted_sequences_brute(r, k):
    """All length change sequences of length 2k passing the restricted-family test."""
    steps = list(range(-r, r + 1, 2))
    found = []
    for mid in product(steps, repeat=2 * k - 2):
        seq = (r, *mid, -r)
        if sum(seq) != 0:
            continue
        ok = True
        for j in range(1 if r % 2 else 2, r + 1, 2):
            h = 0
            for x in mid:
                h += (x == j) - (x == -j)
                if h < 0:
                    ok = False
            ok = ok and h == 0
        if r % 2 == 1 and 0 in mid:
            ok = False
        if ok:
            found.append(seq)
    return found
