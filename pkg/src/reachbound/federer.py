"""Empirical reach from samples of Z(f) through Federer's pairwise quotient.

For any two points z, z' of a submanifold Z,
``reach(Z, z) <= ||z' - z||^2 / (2 dist(z' - z, T_z Z))``, and the infimum
over all pairs is the reach. A finite sample therefore gives an upper
bound, which tightens as the sample densifies.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, NoAdmissiblePairs, PreconditionViolated
from .linalg import EPS
from .poly import PolyTuple, evaluate, evaluate_many, jacobian, jacobian_many
from .zeros import newton_refine

DEDUP = 1e-8
TD_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class VarietySample:
    R: float
    points: np.ndarray  # (N, n)
    jacobians: np.ndarray  # (N, q, n)
    pinvs: np.ndarray  # (N, n, q)
    residuals: np.ndarray  # (N,)
    probes: int = 0
    starts: int = 0
    rejects: int = 0
    seed: int | None = None

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def projectors(self) -> np.ndarray:
        """Orthogonal projectors D_zf^dagger D_zf onto the normal spaces, (N, n, n)."""
        return np.einsum("xnq,xqm->xnm", self.pinvs, self.jacobians)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.points.shape[1]
        w.writerow([f"x{k}" for k in range(n)] + ["residual"])
        for p, r in zip(self.points, self.residuals):
            w.writerow([repr(float(v)) for v in p] + [repr(float(r))])
        return buf.getvalue()


def _random_frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """n x k matrix with orthonormal columns, Haar distributed."""
    G = rng.standard_normal((n, k))
    Q, Rm = np.linalg.qr(G)
    return Q * np.sign(np.diag(Rm))


def _line_interval(a: np.ndarray, b: np.ndarray, R: float) -> tuple[float, float]:
    lo, hi = -math.inf, math.inf
    for ak, bk in zip(a, b):
        if abs(bk) < 1e-300:
            continue
        t1, t2 = (-R - ak) / bk, (R - ak) / bk
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    return lo, hi


def _real_roots_on(coefs_low_first: np.ndarray, lo: float, hi: float) -> np.ndarray:
    c = np.trim_zeros(np.asarray(coefs_low_first, dtype=float), "b")
    if c.size <= 1:
        return np.empty(0)
    r = np.polynomial.polynomial.polyroots(c)
    scale = max(1.0, float(np.max(np.abs(r))))
    r = r[np.abs(r.imag) <= 1e-7 * scale].real
    pad = 1e-9 * max(1.0, abs(lo), abs(hi))
    return np.sort(r[(r >= lo - pad) & (r <= hi + pad)])


def _line_candidates(f: PolyTuple, a: np.ndarray, b: np.ndarray, R: float) -> tuple[list, int]:
    """Zeros of the single polynomial f on the line a + t b inside the cube."""
    lo, hi = _line_interval(a, b, R)
    if not lo < hi:
        return [], 0
    d = f.degrees[0]
    # exact interpolation of the degree-d restriction at Chebyshev nodes
    k = np.arange(d + 1)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid + half * np.cos((2 * k + 1) * np.pi / (2 * d + 2))
    vals = evaluate_many(f, a[None] + nodes[:, None] * b[None])[:, 0]
    V = np.vander((nodes - mid) / half, d + 1, increasing=True)
    c = np.linalg.solve(V, vals)
    ts = _real_roots_on(c, -1.0, 1.0) * half + mid
    return [a + t * b for t in ts], len(ts)


def _slice_candidates(
    f: PolyTuple, a: np.ndarray, B: np.ndarray, R: float, rng: np.random.Generator, grid: int = 3
) -> tuple[list, int]:
    """Newton on t -> f(a + B t) from a coarse grid of starts in the slice."""
    q = B.shape[1]
    axis = np.linspace(-R, R, grid) if grid > 1 else np.zeros(1)
    starts = np.array(np.meshgrid(*([axis] * q), indexing="ij")).reshape(q, -1).T
    starts = starts + rng.uniform(-0.5, 0.5, starts.shape) * (2 * R / max(grid, 1))
    out = []
    for t in starts:
        for _ in range(50):
            x = a + B @ t
            fx = evaluate(f, x)
            J = jacobian(f, x) @ B
            try:
                step = np.linalg.solve(J, fx)
            except np.linalg.LinAlgError:
                break
            t = t - step
            if not np.all(np.isfinite(t)) or np.max(np.abs(t)) > 1e3 * R * math.sqrt(f.n):
                break
            if np.max(np.abs(step)) <= 1e-13 * max(1.0, float(np.max(np.abs(t)))):
                break
        x = a + B @ t
        if np.all(np.isfinite(x)):
            out.append(x)
    return out, len(starts)


def _univariate_roots(f: PolyTuple, R: float) -> list:
    c = np.zeros(f.degrees[0] + 1)
    for e, v in f.coeffs[0].items():
        c[e[0]] = v
    return [np.array([t]) for t in _real_roots_on(c, -R, R)]


def sample_variety(
    f: PolyTuple,
    R: float,
    N: int,
    seed: int = 0,
    max_probes: int | None = None,
    tol: float | None = None,
) -> VarietySample:
    """Up to N points of Z(f) inside [-R, R]^n, with Jacobians and pseudoinverses.

    Probe k draws an affine slice a + B t (a uniform in the cube, B a Haar
    random frame of dimension q) from a generator seeded by (seed, k). For a
    single polynomial the slice is a line and its real roots are found from
    the exact univariate restriction; otherwise Newton runs from a grid of
    starts. Candidates are Newton-polished, then kept when inside the cube,
    within the zero tolerance, nonsingular, and more than 1e-8 from every
    kept point.
    """
    n, q = f.n, f.q
    if q > n:
        raise ValueError("need q <= n")
    if N < 1:
        raise ValueError("N must be positive")
    if max_probes is None:
        max_probes = 20 * N + 200
    kept: list[np.ndarray] = []
    probes = starts = rejects = 0

    def consider(x: np.ndarray) -> None:
        nonlocal rejects
        x, r, ok = newton_refine(f, x, tol=tol)
        if (
            not ok
            or np.max(np.abs(x)) > R * (1 + 1e-12)
            or any(np.max(np.abs(x - y)) < DEDUP for y in kept)
        ):
            rejects += 1
            return
        s = np.linalg.svd(jacobian(f, x), compute_uv=False)
        if s[-1] <= n * EPS * s[0]:
            rejects += 1
            return
        kept.append(x)

    if n == 1 and q == 1:
        probes = 1
        for x in _univariate_roots(f, R):
            starts += 1
            consider(x)
    else:
        for k in range(max_probes):
            if len(kept) >= N:
                break
            probes += 1
            rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
            a = rng.uniform(-R, R, n)
            B = _random_frame(rng, n, q)
            if q == 1:
                cands, s = _line_candidates(f, a, B[:, 0], R)
            else:
                cands, s = _slice_candidates(f, a, B, R, rng)
            starts += s
            for x in cands:
                if len(kept) >= N:
                    break
                consider(x)
    if not kept:
        raise EmptySample(probes)
    X = np.array(kept[:N])
    J = jacobian_many(f, X)
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    P = np.einsum("xkn,xk,xqk->xnq", Vt, 1.0 / s, U)
    res = np.max(np.abs(evaluate_many(f, X)), axis=1)
    return VarietySample(float(R), X, J, P, res, probes, starts, rejects, seed)


def tangent_distance(sample: VarietySample, i: int, j: int) -> float:
    """dist_2(z_j - z_i, T_{z_i} Z) = ||D f^dagger D f (z_j - z_i)||_2 at z_i."""
    if i == j:
        raise PreconditionViolated("tangent_distance needs two distinct indices")
    d = sample.points[j] - sample.points[i]
    return float(np.linalg.norm(sample.pinvs[i] @ (sample.jacobians[i] @ d)))


@dataclass(frozen=True)
class ReachEstimate:
    estimate: float
    argmin_pair: tuple[int, int]
    pairs_scanned: int
    pruned: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "argmin_pair": list(self.argmin_pair),
            "pairs_scanned": self.pairs_scanned,
            "pruned": self.pruned,
            **self.extra,
        }


def _scan(sample: VarietySample, anchors: np.ndarray, partners: np.ndarray, min_sep: float):
    Z = sample.points
    Pr = sample.projectors
    best = math.inf
    arg = (-1, -1)
    scanned = pruned = 0
    for i in anchors:
        cand = partners[partners != i]
        Dz = Z[cand] - Z[i]
        dist = np.linalg.norm(Dz, axis=1)
        ok = dist >= min_sep
        # the quotient is at least dist / 2, so far pairs cannot improve
        far = ok & (dist >= 2.0 * best)
        pruned += int(far.sum())
        ok &= ~far
        scanned += int(ok.sum())
        if not ok.any():
            continue
        td = np.linalg.norm(Dz[ok] @ Pr[i].T, axis=1)
        with np.errstate(divide="ignore"):
            quo = np.where(td >= TD_FLOOR, dist[ok] ** 2 / (2.0 * np.maximum(td, TD_FLOOR)), math.inf)
        k = int(np.argmin(quo))
        if quo[k] < best:
            best = float(quo[k])
            arg = (int(i), int(cand[ok][k]))
    return best, arg, scanned, pruned


def estimate_reach(
    sample: VarietySample, min_sep: float | None = None, anchor_radius: float | None = None
) -> ReachEstimate:
    """min over ordered pairs (i, j), ||z_j - z_i|| >= min_sep, of Federer's quotient.

    ``anchor_radius`` restricts the tangent point z_i to ||z_i||_inf <= anchor_radius
    (partners range over the whole sample). The result upper-bounds the
    reach of the anchored part of Z(f); it is +inf when every pair has a
    vanishing tangent distance (an affine variety).
    """
    m = len(sample)
    if m < 2:
        raise NoAdmissiblePairs("need at least two sample points")
    if min_sep is None:
        min_sep = 1e-3 * sample.R
    idx = np.arange(m)
    anchors = idx
    if anchor_radius is not None:
        anchors = idx[np.max(np.abs(sample.points), axis=1) <= anchor_radius]
    best, arg, scanned, pruned = _scan(sample, anchors, idx, min_sep)
    if scanned == 0 and pruned == 0:
        raise NoAdmissiblePairs(f"no pair is separated by min_sep={min_sep}")
    return ReachEstimate(best, arg, scanned, pruned)


def estimate_local_reach(
    sample: VarietySample, zeta, r: float, min_sep: float | None = None
) -> ReachEstimate:
    """min{r, t} with t the least quotient over pairs inside the ball B(zeta, r).

    Under the local-estimate criterion this is the value certified for
    reach(Z, zeta) when the quotient bound holds on the whole ball; from a
    finite sample it is an estimate.
    """
    zeta = np.asarray(zeta, dtype=float).reshape(-1)
    if min_sep is None:
        min_sep = 1e-3 * sample.R
    inside = np.nonzero(np.linalg.norm(sample.points - zeta, axis=1) <= r)[0]
    if inside.size < 2:
        raise NoAdmissiblePairs(f"fewer than two sample points within {r} of zeta")
    best, arg, scanned, pruned = _scan(sample, inside, inside, min_sep)
    if scanned == 0 and pruned == 0:
        raise NoAdmissiblePairs(f"no pair in the ball is separated by min_sep={min_sep}")
    return ReachEstimate(min(r, best), arg, scanned, pruned, {"radius": r, "ball_points": int(inside.size)})
