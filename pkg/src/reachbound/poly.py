"""Sparse real polynomial tuples: evaluation, derivatives and the 1-norm calculus."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegreeOverflowError

Exp = tuple[int, ...]


def grlex_key(e: Exp) -> tuple:
    return (sum(e), e)


def all_monomials(n: int, d: int) -> list[Exp]:
    """Every exponent in n variables of total degree <= d, graded-lex ordered."""
    out = []
    for total in range(d + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            e = [0] * n
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return sorted(set(out), key=grlex_key)


@dataclass(frozen=True, eq=False)
class PolyTuple:
    """A q-tuple of polynomials in n variables with declared degree vector.

    ``coeffs[i]`` maps exponent tuples to nonzero real coefficients and
    ``supports[i]`` is the (possibly larger) declared support M_i.
    Build instances through :meth:`from_terms`, which validates and
    canonicalises; instances are treated as immutable.
    """

    n: int
    degrees: tuple[int, ...]
    coeffs: tuple[Mapping[Exp, float], ...]
    supports: tuple[frozenset, ...]
    integer: bool = False

    @classmethod
    def from_terms(
        cls,
        n: int,
        degrees: Sequence[int],
        polys: Sequence[Mapping[Sequence[int], float]],
        supports: Sequence[Iterable[Sequence[int]]] | None = None,
        allow_overdetermined: bool = False,
    ) -> "PolyTuple":
        degrees = tuple(int(d) for d in degrees)
        if len(degrees) != len(polys):
            raise ValueError(f"{len(polys)} polynomials but {len(degrees)} degrees")
        if any(d < 0 for d in degrees):
            raise ValueError("degrees must be nonnegative")
        if not allow_overdetermined and len(polys) > n:
            raise ValueError(f"q={len(polys)} > n={n}: only square or underdetermined tuples")
        coeffs = []
        sups = []
        integer = True
        for i, poly in enumerate(polys):
            acc: dict[Exp, float] = {}
            for e, c in poly.items():
                e = tuple(int(a) for a in e)
                if len(e) != n or any(a < 0 for a in e):
                    raise ValueError(f"bad exponent {e} for n={n}")
                c = float(c)
                if c == 0.0:
                    continue
                if sum(e) > degrees[i]:
                    raise DegreeOverflowError(i, sum(e), degrees[i])
                acc[e] = acc.get(e, 0.0) + c
            acc = {e: c for e, c in acc.items() if c != 0.0}
            integer = integer and all(float(c).is_integer() for c in acc.values())
            sup = set(acc)
            if supports is not None:
                for e in supports[i]:
                    e = tuple(int(a) for a in e)
                    if len(e) != n or sum(e) > degrees[i]:
                        raise ValueError(f"support exponent {e} incompatible with n={n}, d={degrees[i]}")
                    sup.add(e)
            coeffs.append({e: acc[e] for e in sorted(acc, key=grlex_key)})
            sups.append(frozenset(sup))
        return cls(n=n, degrees=degrees, coeffs=tuple(coeffs), supports=tuple(sups), integer=integer)

    @property
    def q(self) -> int:
        return len(self.degrees)

    @property
    def D(self) -> int:
        return max(self.degrees) if self.degrees else 0

    @property
    def delta(self) -> np.ndarray:
        return np.asarray(self.degrees, dtype=float)

    def scaled(self, c: float) -> "PolyTuple":
        return PolyTuple.from_terms(
            self.n, self.degrees, [{e: c * v for e, v in p.items()} for p in self.coeffs], self.supports
        )

    def __repr__(self) -> str:
        return f"PolyTuple(n={self.n}, degrees={self.degrees}, text={to_text(self)!r})"

    @cached_property
    def homogeneous(self) -> "PolyTuple":
        return homogenize(self)

    # -- compiled dense tables, built once per instance -----------------

    @cached_property
    def _table(self):
        monos = sorted({e for p in self.coeffs for e in p}, key=grlex_key)
        if not monos:
            monos = [(0,) * self.n]
        E = np.array(monos, dtype=np.int64).reshape(len(monos), self.n)
        index = {e: j for j, e in enumerate(monos)}
        C = np.zeros((self.q, len(monos)))
        for i, p in enumerate(self.coeffs):
            for e, c in p.items():
                C[i, index[e]] = c
        # first partial derivatives: DE[k] exponents, DC[k] coefficients
        DE = np.repeat(E[None], self.n, axis=0)
        DC = np.zeros((self.n, self.q, len(monos)))
        for k in range(self.n):
            DE[k, :, k] = np.maximum(E[:, k] - 1, 0)
            DC[k] = C * E[:, k]
        maxpow = int(E.max()) if E.size else 0
        return E, C, DE, DC, maxpow


def _powers(X: np.ndarray, maxpow: int) -> np.ndarray:
    """P[:, k, j] = X[:, k] ** j by repeated multiplication."""
    P = np.empty(X.shape + (maxpow + 1,))
    P[..., 0] = 1.0
    for j in range(1, maxpow + 1):
        P[..., j] = P[..., j - 1] * X
    return P


def evaluate_many(f: PolyTuple, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != f.n:
        raise ValueError(f"points have dimension {X.shape[1]}, expected {f.n}")
    E, C, _, _, maxpow = f._table
    P = _powers(X, maxpow)
    V = np.prod(P[:, np.arange(f.n), E], axis=-1)
    return V @ C.T


def evaluate(f: PolyTuple, x) -> np.ndarray:
    """Value of the tuple at one point, with exactly rounded per-polynomial sums."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != f.n:
        raise ValueError(f"point has dimension {x.shape[0]}, expected {f.n}")
    out = np.empty(f.q)
    for i, p in enumerate(f.coeffs):
        out[i] = math.fsum(c * math.prod(xk**a for xk, a in zip(x, e)) for e, c in p.items())
    return out


def jacobian_many(f: PolyTuple, X) -> np.ndarray:
    """Stack of Jacobians, shape (N, q, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != f.n:
        raise ValueError(f"points have dimension {X.shape[1]}, expected {f.n}")
    _, _, DE, DC, maxpow = f._table
    P = _powers(X, maxpow)
    n = f.n
    V = np.prod(P[:, np.arange(n), DE], axis=-1)  # (N, n, M)
    return np.einsum("xkm,kqm->xqk", V, DC)


def jacobian(f: PolyTuple, x) -> np.ndarray:
    return jacobian_many(f, np.asarray(x, dtype=float).reshape(1, -1))[0]


@dataclass(frozen=True)
class DerivativeTensor:
    """The order-``order`` derivative of f at ``point``; shape (q, n, ..., n).

    ``entries`` is None for the identically-zero tensors of order above the
    maximal degree; call :meth:`array` to materialise them anyway.
    """

    order: int
    point: tuple
    q: int
    n: int
    entries: np.ndarray | None

    @property
    def is_zero(self) -> bool:
        return self.entries is None

    @property
    def shape(self) -> tuple:
        return (self.q,) + (self.n,) * self.order

    def array(self) -> np.ndarray:
        return np.zeros(self.shape) if self.entries is None else self.entries


def _falling(E: np.ndarray, beta: np.ndarray) -> np.ndarray:
    out = np.ones(E.shape[0])
    for k, b in enumerate(beta):
        for j in range(b):
            out = out * (E[:, k] - j)
    return out


def derivative_tensor(f: PolyTuple, x, order: int) -> DerivativeTensor:
    if order < 1:
        raise ValueError("order must be >= 1")
    x = np.asarray(x, dtype=float).reshape(-1)
    pt = tuple(float(v) for v in x)
    if order > f.D:
        return DerivativeTensor(order, pt, f.q, f.n, None)
    E, C, _, _, maxpow = f._table
    P = _powers(x[None], maxpow)[0]
    T = np.zeros((f.q,) + (f.n,) * order)
    for combo in itertools.combinations_with_replacement(range(f.n), order):
        beta = np.bincount(combo, minlength=f.n)
        ff = _falling(E, beta)
        if not ff.any():
            continue
        Eb = np.maximum(E - beta, 0)
        vals = np.prod(P[np.arange(f.n), Eb], axis=-1) * ff
        col = C @ vals
        for perm in set(itertools.permutations(combo)):
            T[(slice(None),) + perm] = col
    for i, d in enumerate(f.degrees):
        if order > d:
            T[i] = 0.0
    return DerivativeTensor(order, pt, f.q, f.n, T)


def one_norm(f: PolyTuple) -> float:
    """max_i of the sum of absolute coefficients of f_i."""
    return max((math.fsum(abs(c) for c in p.values()) for p in f.coeffs), default=0.0)


def row_one_norms(f: PolyTuple) -> np.ndarray:
    return np.array([math.fsum(abs(c) for c in p.values()) for p in f.coeffs])


def directional_derivative_poly(f: PolyTuple, v) -> PolyTuple:
    """The tuple sum_k v_k * df/dX_k, with degrees lowered by one (floored at 0)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != f.n:
        raise ValueError(f"direction has dimension {v.shape[0]}, expected {f.n}")
    polys = []
    for p in f.coeffs:
        acc: dict[Exp, float] = {}
        for e, c in p.items():
            for k in range(f.n):
                if e[k] == 0 or v[k] == 0.0:
                    continue
                e2 = e[:k] + (e[k] - 1,) + e[k + 1 :]
                acc[e2] = acc.get(e2, 0.0) + c * e[k] * v[k]
        polys.append(acc)
    return PolyTuple.from_terms(f.n, [max(d - 1, 0) for d in f.degrees], polys, allow_overdetermined=True)


def homogenize(f: PolyTuple) -> PolyTuple:
    """f^h_i = X_0^{d_i} f_i(X/X_0) in variables (X_0, X_1, ..., X_n)."""
    polys = []
    sups = []
    for d, p, s in zip(f.degrees, f.coeffs, f.supports):
        polys.append({(d - sum(e),) + e: c for e, c in p.items()})
        sups.append([(d - sum(e),) + e for e in s])
    return PolyTuple.from_terms(f.n + 1, f.degrees, polys, sups)


def binom_delta_norm(f: PolyTuple, order: int) -> float:
    if order < 0:
        raise ValueError("order must be >= 0")
    return max(
        (math.comb(d, order) * r for d, r in zip(f.degrees, row_one_norms(f))),
        default=0.0,
    )


def norm_h_inf(x) -> float:
    """max{1, ||x||_inf}."""
    x = np.asarray(x, dtype=float)
    return max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0


# -- serialisation ------------------------------------------------------


def to_dict(f: PolyTuple) -> dict:
    return {
        "n": f.n,
        "q": f.q,
        "degrees": list(f.degrees),
        "polys": [[{"exp": list(e), "coef": c} for e, c in p.items()] for p in f.coeffs],
    }


def from_dict(data: Mapping) -> PolyTuple:
    try:
        n = int(data["n"])
        degrees = [int(d) for d in data["degrees"]]
        polys = [{tuple(t["exp"]): float(t["coef"]) for t in p} for p in data["polys"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed polynomial JSON: {exc}") from exc
    if "q" in data and int(data["q"]) != len(polys):
        raise ValueError(f"q={data['q']} but {len(polys)} polynomials given")
    return PolyTuple.from_terms(n, degrees, polys)


def to_json(f: PolyTuple) -> str:
    return json.dumps(to_dict(f))


def from_json(text: str) -> PolyTuple:
    return from_dict(json.loads(text))


def _fmt_coef(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def to_text(f: PolyTuple) -> str:
    parts = []
    for p in f.coeffs:
        terms = []
        for e, c in p.items():
            factors = [f"x{k}" + (f"^{a}" if a > 1 else "") for k, a in enumerate(e) if a]
            mag = abs(c)
            body = "*".join(([_fmt_coef(mag)] if mag != 1 or not factors else []) + factors)
            terms.append(("- " if c < 0 else "+ ") + body)
        s = " ".join(terms) if terms else "0"
        parts.append(s[2:] if s.startswith("+ ") else "-" + s[2:] if s.startswith("- ") else s)
    return "; ".join(parts)
