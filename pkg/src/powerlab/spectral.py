"""Eigenvalue machinery for adjacency, powered and nonbacktracking operators."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from powerlab.errors import ConvergenceError, GraphError, SizeGuardError
from powerlab.graph import Graph, largest_component
from powerlab.models import Perturbation, apply_perturbation
from powerlab.powering import power_graph
from powerlab.seeding import make_rng

DENSE_MAX_N = 512
NB_DENSE_MAX_N = 500


@dataclass(frozen=True)
class SpectrumResult:
    """Top eigenpairs, descending. ``eigenvectors`` has one column per pair."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "iterations": int(self.iterations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def write_vectors(self, path) -> None:
        """Eigenvectors as little-endian float64, one vector per row."""
        np.ascontiguousarray(self.eigenvectors.T, dtype="<f8").tofile(path)

    @staticmethod
    def read_vectors(path, n: int) -> np.ndarray:
        return np.fromfile(path, dtype="<f8").reshape(-1, n).T


@dataclass(frozen=True)
class NbSpectrum:
    lambda1: float
    abs_lambda2: float
    method: str
    residual: float

    @property
    def ratio(self) -> float:
        return self.abs_lambda2 / np.sqrt(self.lambda1) if self.lambda1 > 0 else float("nan")

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "abs_lambda2": self.abs_lambda2,
            "method": self.method,
            "residual": self.residual,
        }


def _as_operator(op):
    if isinstance(op, spla.LinearOperator):
        return op
    if sp.issparse(op):
        return spla.aslinearoperator(op.astype(np.float64))
    return spla.aslinearoperator(np.asarray(op, dtype=np.float64))


def _to_dense(op, n):
    if sp.issparse(op):
        return op.toarray().astype(np.float64)
    if isinstance(op, np.ndarray):
        return op.astype(np.float64)
    return np.asarray(op.matmat(np.eye(n)), dtype=np.float64)


def top_eigs_sym(op, k: int = 1, tol: float = 1e-8, max_iter: int = 5000, seed=0) -> SpectrumResult:
    """Top ``k`` eigenpairs (algebraic order) of a symmetric operator.

    ``op`` may be a dense array, a sparse matrix or a ``LinearOperator``.
    Dimensions up to 512 use a dense solve; larger ones use implicitly
    restarted Lanczos (ARPACK) with a seeded start vector. Every pair must
    satisfy ``||Av - lambda v|| <= tol * (|lambda_1| + 1)``.
    """
    n = op.shape[0]
    if op.shape != (n, n):
        raise ValueError(f"operator must be square, got shape {op.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= dimension {n}, got k={k}")
    lin = _as_operator(op)
    if n <= DENSE_MAX_N or k >= n - 1:
        M = _to_dense(op, n)
        vals, vecs = np.linalg.eigh((M + M.T) / 2)
        vals, vecs = vals[::-1][:k], vecs[:, ::-1][:, :k]
        iterations = 1
    else:
        count = [0]

        def mv(x):
            count[0] += 1
            return lin.matvec(x)

        counted = spla.LinearOperator((n, n), matvec=mv, dtype=np.float64)
        v0 = make_rng(seed).standard_normal(n)
        ncv = min(n, max(2 * k + 1, 20))
        try:
            vals, vecs = spla.eigsh(counted, k=k, which="LA", v0=v0, tol=tol, maxiter=max_iter, ncv=ncv)
        except spla.ArpackNoConvergence as exc:
            res = _residuals(lin, exc.eigenvalues, exc.eigenvectors)
            raise ConvergenceError(f"Lanczos did not converge in {max_iter} restarts", res) from None
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        iterations = count[0]
    res = _residuals(lin, vals, vecs)
    scale = tol * (abs(vals[0]) + 1.0)
    if np.any(res > max(scale, 1e-10 * n)):
        raise ConvergenceError(f"residuals {res.max():.3g} exceed {scale:.3g}", res)
    return SpectrumResult(np.asarray(vals, dtype=float), vecs, res, iterations)


def _residuals(lin, vals, vecs):
    if vecs is None or len(vals) == 0:
        return np.zeros(0)
    AV = lin.matmat(vecs)
    return np.linalg.norm(AV - vecs * np.asarray(vals)[None, :], axis=0)


def powered_matrix(g: Graph, r: int) -> sp.csr_matrix:
    return power_graph(g, r).graph.adjacency_matrix()


def lambda2_powered(g: Graph, r: int, tol: float = 1e-8, seed=0, restrict: bool = True) -> float:
    """Second-largest eigenvalue of ``A(G^(r))``, loops on the diagonal.

    With ``restrict=True`` the statistic is taken on the largest connected
    component.
    """
    if restrict:
        g, _ = largest_component(g)
    if g.n < 2:
        raise GraphError("need at least two vertices for a second eigenvalue")
    A = powered_matrix(g, r)
    return float(top_eigs_sym(A, k=2, tol=tol, seed=seed).eigenvalues[1])


def companion_matrix(g: Graph) -> sp.csr_matrix:
    """The ``2n`` linearization ``[[A, I - D], [I, 0]]`` of the nonbacktracking operator."""
    n = g.n
    A = g.adjacency_matrix()
    I = sp.identity(n, format="csr")
    D = sp.diags(g.degrees.astype(np.float64))
    return sp.bmat([[A, I - D], [I, None]], format="csr")


def _drop_trivial(vals: np.ndarray, count: int) -> np.ndarray:
    """Remove ``count`` eigenvalues nearest to +1 and to -1 each."""
    vals = list(vals)
    for target in (1.0, -1.0):
        for _ in range(count):
            if not vals:
                break
            i = int(np.argmin([abs(v - target) for v in vals]))
            vals.pop(i)
    return np.asarray(vals)


def two_core(g: Graph) -> Graph:
    """Subgraph left after repeatedly deleting vertices of degree at most one."""
    deg = g.degrees.astype(np.int64).copy()
    alive = np.ones(g.n, dtype=bool)
    stack = list(np.flatnonzero(deg <= 1))
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for u in g.neighbors(v):
            if alive[u]:
                deg[u] -= 1
                if deg[u] == 1:
                    stack.append(int(u))
    return g.subgraph(np.flatnonzero(alive))


def nb_top_two(g: Graph, dense_max_n: int = NB_DENSE_MAX_N, tol: float = 1e-6, seed=0) -> NbSpectrum:
    """Largest and second-largest modulus of the nonbacktracking operator ``B``.

    Hanging trees only add nilpotent parts to ``B``, so the work is done on
    the 2-core. There ``det(I - uB) = (1 - u^2)^(m - n) det(I - uK)`` with
    ``K`` the companion linearization, so ``B`` has the spectrum of ``K``
    plus ``+-1`` each ``m - n`` times (removed instead when ``m < n``).
    """
    if g.has_self_loops:
        raise GraphError("nonbacktracking operator is defined here for graphs without self-loops")
    if g.num_edges < 2:
        raise GraphError(f"need at least 2 edges, got {g.num_edges}")
    g = two_core(g)
    m, n = g.num_edges, g.n
    if m == 0:
        return NbSpectrum(0.0, 0.0, "dense_companion" if n <= dense_max_n else "iterative", 0.0)
    K = companion_matrix(g)
    extra = m - n
    if n <= dense_max_n:
        vals, vecs = np.linalg.eig(K.toarray())
        order = np.argsort(-np.abs(vals))
        vals, vecs = vals[order], vecs[:, order]
        top = vals[0]
        residual = float(np.linalg.norm(K @ vecs[:, 0] - top * vecs[:, 0]))
        spec = vals if extra >= 0 else _drop_trivial(vals, -extra)
        method = "dense_companion"
    else:
        v0 = make_rng(seed).standard_normal(2 * n)
        try:
            vals, vecs = spla.eigs(K, k=4, which="LM", v0=v0, tol=tol, ncv=40, maxiter=5000)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError("nonbacktracking eigensolve did not converge") from None
        order = np.argsort(-np.abs(vals))
        vals, vecs = vals[order], vecs[:, order]
        residual = float(max(np.linalg.norm(K @ vecs[:, i] - vals[i] * vecs[:, i]) for i in range(2)))
        if residual > 1e3 * tol * (abs(vals[0]) + 1):
            raise ConvergenceError(f"nonbacktracking residual {residual:.3g} too large", (residual,))
        spec = vals if extra >= 0 else _drop_trivial(vals, -extra)
        method = "iterative"
    moduli = np.abs(spec)
    if extra > 0:
        moduli = np.concatenate([moduli, np.ones(2 * min(extra, 2))])
    moduli = np.sort(moduli)[::-1]
    if len(moduli) < 2:
        moduli = np.concatenate([moduli, np.zeros(2)])
    return NbSpectrum(float(moduli[0]), float(moduli[1]), method, residual)


def trace_nonbacktracking(g: Graph, m: int) -> int:
    """Exact ``tr(B^m)``: the number of closed nonbacktracking walks of length ``m``.

    Works with the ``n x n`` blocks ``P_k`` of the companion powers,
    ``P_{k+1} = A P_k - Q P_{k-1}`` with ``Q = D - I``, and the split
    ``P_{s+t} = P_s P_t - P_{s-1} Q P_{t-1}`` so only ``P_k`` up to
    ``k = ceil(m/2)`` are formed.
    """
    if m < 1:
        raise ValueError(f"walk length must be >= 1, got {m}")
    if g.has_self_loops:
        raise GraphError("graph must be simple")
    n = g.n
    deg = g.degrees.astype(np.int64)
    dmax = int(deg.max()) if n else 0
    if float(2 * dmax + 1) ** m >= 2.0**62:
        raise SizeGuardError(f"entries of the walk matrices may overflow 64 bits (max degree {dmax}, m={m})")
    A = g.adjacency_matrix(np.int64)
    Q = sp.diags(deg - 1)
    P = [sp.identity(n, dtype=np.int64, format="csr"), A]
    while len(P) <= (m + 1) // 2 + 1:
        P.append(sp.csr_matrix(A @ P[-1] - Q @ P[-2]))

    def diag_sum(k, weights=None):
        if k < 0:
            return 0
        s, t = k // 2, k - k // 2
        if s == 0:
            d = P[t].diagonal()
        else:
            d = np.asarray(P[s].multiply(P[t]).sum(axis=1)).ravel()
            d = d - np.asarray((P[s - 1] @ Q).multiply(P[t - 1]).sum(axis=1)).ravel()
        d = d.astype(np.int64)
        return int(d.sum()) if weights is None else int((d * weights).sum())

    total = diag_sum(m) - diag_sum(m - 2, deg - 1)
    if m % 2 == 0:
        total += 2 * (g.num_edges - n)
    return total


def rayleigh(op, f) -> float:
    """``<op f, f> / <f, f>``."""
    f = np.asarray(f, dtype=np.float64)
    nrm = float(f @ f)
    if nrm == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    if callable(op) and not hasattr(op, "shape"):
        g = np.asarray(op(f), dtype=np.float64)
    else:
        g = _as_operator(op).matvec(f)
    return float(g @ f) / nrm


def _top_k_values(A: sp.spmatrix, k: int, seed) -> np.ndarray:
    n = A.shape[0]
    if n <= 2000:
        return np.linalg.eigvalsh(A.toarray())[::-1][:k]
    return top_eigs_sym(A, k=k, seed=seed).eigenvalues


def weyl_gap(g: Graph, h: Perturbation, k: int, seed=0) -> tuple[float, float]:
    """``(|lambda_k(G+H) - lambda_k(G)|, ||A_H||)`` for the ``k``-th largest eigenvalue."""
    if not 1 <= k <= g.n:
        raise ValueError(f"need 1 <= k <= n = {g.n}, got {k}")
    if not h.toggled_edges:
        return 0.0, 0.0
    gh = apply_perturbation(g, h)
    lam_g = _top_k_values(g.adjacency_matrix(), k, seed)[k - 1]
    lam_gh = _top_k_values(gh.adjacency_matrix(), k, seed)[k - 1]
    idx = {v: i for i, v in enumerate(h.vertices)}
    H = np.zeros((h.c, h.c))
    for u, v in h.toggled_edges:
        H[idx[u], idx[v]] = H[idx[v], idx[u]] = 1.0
    rhs = float(np.abs(np.linalg.eigvalsh(H)).max())
    return float(abs(lam_gh - lam_g)), rhs
