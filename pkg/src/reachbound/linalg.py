"""Pseudoinverses and the mixed operator norms used by the condition number and gamma."""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass

import numpy as np

from .errors import NonSurjective, PreconditionViolated

EPS = np.finfo(float).eps
Q_EXACT = 16


@dataclass(frozen=True)
class OperatorNormBounds:
    lower: float
    upper: float
    exact: bool

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} > upper {self.upper}")
        if self.exact and self.lower != self.upper:
            raise ValueError("exact bounds must coincide")


def pseudoinverse(A, rank_tol: float | None = None) -> np.ndarray:
    """Right inverse A^T (A A^T)^{-1} of a surjective q x n matrix, via SVD.

    Raises NonSurjective when the q-th singular value is <= rank_tol
    (default n * eps * sigma_1).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    q, n = A.shape
    if q > n:
        raise ValueError(f"pseudoinverse needs q <= n, got {q} x {n}")
    if q == 0:
        return np.zeros((n, 0))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    tol = n * EPS * s[0] if rank_tol is None else rank_tol
    if s[-1] <= tol:
        raise NonSurjective(float(s[-1]))
    return (Vt.T / s) @ U.T


def sign_vectors(q: int) -> np.ndarray:
    """All vectors in {+1,-1}^q with first entry +1 (the others follow by symmetry)."""
    if q == 0:
        return np.zeros((1, 0))
    rows = [(1.0,) + r for r in itertools.product((1.0, -1.0), repeat=q - 1)]
    return np.array(rows)


def opnorm_inf_two(A, q_exact: int = Q_EXACT, seed: int = 0) -> OperatorNormBounds:
    """The (inf, 2) operator norm of an n x q matrix.

    The norm of a convex function over the cube peaks at a vertex, so for
    q <= q_exact the maximum over sign vectors is returned exactly. Above
    that, a random-vertex lower bound and the column-norm-sum upper bound.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    q = A.shape[1]
    if q == 0 or not A.any():
        return OperatorNormBounds(0.0, 0.0, True)
    if q <= q_exact:
        Y = sign_vectors(q) @ A.T
        val = float(np.sqrt(np.max(np.einsum("ij,ij->i", Y, Y))))
        return OperatorNormBounds(val, val, True)
    rng = np.random.default_rng(seed)
    S = rng.choice((-1.0, 1.0), size=(2**16, q))
    Y = S @ A.T
    lower = float(np.sqrt(np.max(np.einsum("ij,ij->i", Y, Y))))
    upper = float(np.linalg.norm(A, axis=0).sum())
    return OperatorNormBounds(lower, max(lower, upper), False)


def minvalue_inf_two(A, rank_tol: float | None = None) -> float:
    """1 / ||A^dagger||_{inf,2}, i.e. min over v in the row space of ||Av||_inf / ||v||_2.

    Zero when A is not surjective.
    """
    try:
        P = pseudoinverse(A, rank_tol)
    except NonSurjective:
        return 0.0
    return 1.0 / opnorm_inf_two(P).upper


def minvalue_inf_two_many(As: np.ndarray) -> np.ndarray:
    """Vectorised :func:`minvalue_inf_two` over a stack of q x n matrices (q <= Q_EXACT)."""
    As = np.asarray(As, dtype=float)
    N, q, n = As.shape
    if q == 1:
        return np.linalg.norm(As[:, 0, :], axis=1)
    U, s, Vt = np.linalg.svd(As, full_matrices=False)
    ok = s[:, -1] > n * EPS * s[:, 0]
    out = np.zeros(N)
    if not ok.any():
        return out
    U, s, Vt = U[ok], s[ok], Vt[ok]
    P = np.einsum("xkn,xk,xqk->xnq", Vt, 1.0 / s, U)
    Y = np.einsum("xnq,sq->xsn", P, sign_vectors(q))
    out[ok] = 1.0 / np.sqrt(np.max(np.einsum("xsn,xsn->xs", Y, Y), axis=1))
    return out


# -- multilinear (2,2) norms ----------------------------------------------


def _contract(T: np.ndarray, vecs: dict[int, np.ndarray]) -> np.ndarray:
    letters = string.ascii_letters[: T.ndim]
    ops = [T] + [vecs[k] for k in sorted(vecs)]
    subs = [letters] + [letters[k] for k in sorted(vecs)]
    out = "".join(c for k, c in enumerate(letters) if k not in vecs)
    return np.einsum(",".join(subs) + "->" + out, *ops)


def _unfolding_bound(T: np.ndarray) -> float:
    best = float(np.linalg.norm(T))
    for k in range(T.ndim):
        M = np.moveaxis(T, k, 0).reshape(T.shape[k], -1)
        best = min(best, float(np.linalg.norm(M, 2)))
    return best


def tensor_22_norm_bounds(
    T, seed: int = 0, restarts: int = 8, iters: int = 200, tol: float = 1e-10
) -> OperatorNormBounds:
    """Bracket the (2,2)-spectral norm of the multilinear map given by T.

    ``T`` has shape (m, n, ..., n): the first axis is the output, the rest
    are the input slots. The upper bound is the smallest spectral norm
    over single-mode matricizations (each of which is at most the
    Frobenius norm); the lower bound comes from alternating power
    iteration and is clamped below the upper one.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim < 3:
        raise ValueError("need an output axis and at least two input slots")
    if not T.any():
        return OperatorNormBounds(0.0, 0.0, True)
    upper = _unfolding_bound(T)
    order = T.ndim - 1

    # output rank one and bilinear: T = a (x) H, norm = ||a|| sigma_max(H)
    if order == 2:
        sv = np.linalg.svd(T.reshape(T.shape[0], -1), compute_uv=False)
        if sv.size == 1 or sv[1] <= 1e-14 * sv[0]:
            val = _rank_one_bilinear(T)
            return OperatorNormBounds(val, val, True)

    rng = np.random.default_rng(seed)
    lower = 0.0
    for r in range(restarts):
        if r == 0:
            M = np.moveaxis(T, 1, 0).reshape(T.shape[1], -1)
            v0 = np.linalg.svd(M)[0][:, 0]
            vs = [v0.copy() for _ in range(order)]
        else:
            vs = [rng.standard_normal(T.shape[1]) for _ in range(order)]
            vs = [v / np.linalg.norm(v) for v in vs]
        prev = -1.0
        val = 0.0
        for _ in range(iters):
            u = _contract(T, {k + 1: vs[k] for k in range(order)})
            nu = np.linalg.norm(u)
            if nu == 0.0:
                break
            u = u / nu
            for j in range(order):
                w = _contract(T, {0: u, **{k + 1: vs[k] for k in range(order) if k != j}})
                nw = np.linalg.norm(w)
                if nw == 0.0:
                    break
                vs[j] = w / nw
            val = float(np.linalg.norm(_contract(T, {k + 1: vs[k] for k in range(order)})))
            if abs(val - prev) <= tol * max(val, 1.0):
                break
            prev = val
        lower = max(lower, val)
    lower = min(lower, upper)
    exact = upper - lower <= 1e-12 * upper
    if exact:
        lower = upper
    return OperatorNormBounds(lower, upper, exact)


def _rank_one_bilinear(T: np.ndarray) -> float:
    U, s, Vt = np.linalg.svd(T.reshape(T.shape[0], -1), full_matrices=False)
    H = (s[0] * Vt[0]).reshape(T.shape[1], T.shape[2])
    return float(np.linalg.norm(H, 2))


def perturbation_check(A, B) -> tuple[float, float]:
    """(||A^dagger B||_2, 1 / (1 - ||B^dagger (A - B)||_2)); the first never exceeds the second."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Bp = pseudoinverse(B)
    e = float(np.linalg.norm(Bp @ (A - B), 2))
    if e >= 1.0:
        raise PreconditionViolated(f"||B^dagger (A - B)||_2 = {e} >= 1")
    lhs = float(np.linalg.norm(pseudoinverse(A) @ B, 2))
    return lhs, 1.0 / (1.0 - e)
