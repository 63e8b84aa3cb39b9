"""Random polynomial models, their constants, and closed-form tail bounds.

Continuous kinds are zintzo tuples (independent, anti-concentrated,
p-subexponential coefficients); bit kinds have independent integer
coefficients of absolute value at most 2^tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .poly import Exp, PolyTuple, all_monomials

KINDS = ("uniform_continuous", "gaussian", "bit_uniform", "bit_general")
CONTINUOUS = ("uniform_continuous", "gaussian")
BIT = ("bit_uniform", "bit_general")


def renegar_support(n: int, d: int) -> frozenset:
    """R_{n,d}: dehomogenised exponents (d-1)e_k + e_l for k, l in 0..n (e_0 is the X_0 slot)."""
    out = set()
    for k in range(n + 1):
        for l in range(n + 1):
            e = [0] * (n + 1)
            e[k] += d - 1
            e[l] += 1
            out.add(tuple(e[1:]))
    return frozenset(out)


def dense_support(n: int, d: int) -> frozenset:
    return frozenset(all_monomials(n, d))


@dataclass(frozen=True)
class RandomModelSpec:
    """Coefficient distribution plus optional supports (None = dense).

    gaussian: every coefficient N(mean, sigma^2). bit_general: one integer
    probability table ``weights`` shared by all coefficients.
    """

    kind: str
    tau: int | None = None
    mean: float = 0.0
    sigma: float = 1.0
    p: float | None = None
    weights: Mapping[int, float] | None = None
    supports: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in BIT:
            if self.tau is None or int(self.tau) != self.tau or self.tau < 0:
                raise ConfigError("tau", "bit models need a nonnegative integer tau")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ConfigError("sigma", "must be positive")
        if self.p is not None and self.p < 1:
            raise ConfigError("p", "subexponential order must be >= 1")
        if self.kind == "bit_general":
            if not self.weights:
                raise ConfigError("weights", "bit_general needs a probability table")
            bound = 2 ** int(self.tau)
            if any(int(c) != c or abs(c) > bound for c in self.weights):
                raise ConfigError("weights", f"values must be integers in [-{bound}, {bound}]")
            if any(w < 0 for w in self.weights.values()):
                raise ConfigError("weights", "probabilities must be nonnegative")
            if abs(math.fsum(self.weights.values()) - 1.0) > 1e-9:
                raise ConfigError("weights", "probabilities must sum to 1")

    @property
    def is_standard_gaussian(self) -> bool:
        return self.kind == "gaussian" and self.mean == 0.0 and self.sigma == 1.0

    def resolve_supports(self, n: int, degrees: Sequence[int]) -> tuple[frozenset, ...]:
        if self.supports is None:
            return tuple(dense_support(n, d) for d in degrees)
        if len(self.supports) != len(degrees):
            raise ConfigError("supports", "one support per polynomial")
        out = []
        for i, (M, d) in enumerate(zip(self.supports, degrees)):
            M = frozenset(tuple(int(a) for a in e) for e in M)
            if any(len(e) != n or sum(e) > d for e in M):
                raise ConfigError("supports", f"support {i} has exponents incompatible with n={n}, d={d}")
            missing = renegar_support(n, d) - M
            if missing:
                raise ConfigError("supports", f"support {i} misses required monomials {sorted(missing)}")
            out.append(M)
        return tuple(out)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.tau is not None:
            out["tau"] = self.tau
        if self.kind == "gaussian":
            out.update(mean=self.mean, sigma=self.sigma)
        if self.p is not None:
            out["p"] = self.p
        if self.weights is not None:
            out["weights"] = {str(k): v for k, v in sorted(self.weights.items())}
        if self.supports is not None:
            out["supports"] = [sorted(list(e) for e in M) for M in self.supports]
        return out


@dataclass(frozen=True)
class ModelConstants:
    M: int  # max_i |M_i|
    L: float | None = None
    rho: float | None = None
    w: float | None = None
    u: float | None = None

    def to_dict(self) -> dict:
        return {"M": self.M, "L": self.L, "rho": self.rho, "w": self.w, "u": self.u}


def model_constants(spec: RandomModelSpec, n: int, degrees: Sequence[int]) -> ModelConstants:
    """Tail/anti-concentration constants (continuous) or weight/uniformity (bit)."""
    M = max(len(s) for s in spec.resolve_supports(n, degrees))
    if spec.kind == "uniform_continuous":
        return ModelConstants(M, L=float(M), rho=0.5)
    if spec.kind == "gaussian":
        if spec.is_standard_gaussian:
            return ModelConstants(M, L=math.sqrt(2.0) * M, rho=(2 * math.pi) ** -0.5)
        L = max(abs(spec.mean), 2.0 * spec.sigma) * M
        return ModelConstants(M, L=L, rho=(2 * math.pi) ** -0.5 / spec.sigma)
    tau = int(spec.tau)
    if spec.kind == "bit_uniform":
        w = Fraction(1, 2 ** (tau + 1) + 1)
    else:
        # the largest point probability bounds every weight from above
        w = Fraction(max(spec.weights.values())).limit_denominator(10**15)
    u = math.log((1 + 2 ** (tau + 1)) * w)
    return ModelConstants(M, w=float(w), u=u)


def sample_tuple(spec: RandomModelSpec, degrees: Sequence[int], n: int, q: int, seed) -> PolyTuple:
    """Draw one tuple; ``seed`` is anything numpy's default_rng accepts."""
    degrees = list(degrees)
    if len(degrees) != q:
        raise ConfigError("degrees", f"expected {q} degrees, got {len(degrees)}")
    sups = spec.resolve_supports(n, degrees)
    rng = np.random.default_rng(seed)
    polys = []
    for M in sups:
        monos: list[Exp] = sorted(M, key=lambda e: (sum(e), e))
        k = len(monos)
        if spec.kind == "uniform_continuous":
            c = rng.uniform(-1.0, 1.0, k)
        elif spec.kind == "gaussian":
            c = rng.normal(spec.mean, spec.sigma, k)
        elif spec.kind == "bit_uniform":
            b = 2 ** int(spec.tau)
            c = rng.integers(-b, b, size=k, endpoint=True).astype(float)
        else:
            vals = np.array(sorted(spec.weights), dtype=float)
            probs = np.array([spec.weights[v] for v in sorted(spec.weights)], dtype=float)
            c = rng.choice(vals, size=k, p=probs / probs.sum())
        polys.append(dict(zip(monos, c)))
    return PolyTuple.from_terms(n, degrees, polys, sups)


# -- closed-form tail bounds ---------------------------------------------


@dataclass(frozen=True)
class TailBound:
    value: float  # clamped to [0, 1]; 1 outside the stated range
    raw: float
    in_range: bool
    p: float | None = None
    min_over_p: float | None = None  # raw minimum over p in {1, 2, 4, 8, ln t}

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "raw": self.raw,
            "in_range": self.in_range,
            "p": self.p,
            "min_over_p": self.min_over_p,
        }


def _clamp(raw: float, in_range: bool) -> float:
    if not in_range or not math.isfinite(raw):
        return 1.0
    return min(1.0, max(0.0, raw))


def p_candidates(t: float) -> list[float]:
    ps = [1.0, 2.0, 4.0, 8.0]
    if t > 1 and math.log(t) >= 1.0:
        ps.append(math.log(t))
    return ps


def _need(params: Mapping, *keys):
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise ConfigError(missing[0], "required tail-bound parameter is missing")
    return [params[k] for k in keys]


def _cont_raw(kind: str, params: Mapping, t: float, p: float) -> float:
    n, q, D = _need(params, "n", "q", "D")
    if kind == "reach_log":
        R = params.get("R", 1)
        B = math.comb(n + D, n)
        log_val = (
            math.log(8 * R)
            + (n / 2 + 1) * math.log(n + 1)
            + (q + 2 * n) * math.log(D)
            + (n + q) * math.log(4 * B)
            + (n + q) / p * math.log(t)
            - t * math.log(2)
        )
        return math.exp(min(log_val, 700.0))
    L, rho = _need(params, "L", "rho")
    common = (q + 2 * n) * math.log(D) + (n + q) * math.log(4 * L * rho)
    expo = (p + 2) / (2 * p) * n + q / p
    if kind == "cond_global":
        R = params.get("R", 1)
        lv = math.log(8 * R) + (expo + 1) * math.log(n + 1) + common
        lv += (n + q) / p * math.log(math.log(t)) - math.log(t)
    elif kind == "cond_local":
        x = params.get("x")
        h = 1.0 if x is None else max(1.0, float(np.max(np.abs(np.asarray(x, dtype=float)))))
        lv = math.log(4 * h) + expo * math.log(n + 1) + common
        lv += (n + q) / p * math.log(math.log(t)) - (n + 1) * math.log(t)
    elif kind == "reach":
        R = params.get("R", 1)
        eps = t
        lv = math.log(8 * R) + (expo + 1) * math.log(n + 1) + common
        lv += math.log(eps) + (n + q) / p * math.log(math.log(1 / eps))
    else:
        raise ConfigError("kind", f"unknown continuous tail bound {kind!r}")
    return math.exp(min(lv, 700.0))


def _cont_range(kind: str, params: Mapping, t: float) -> bool:
    n, D = params["n"], params["D"]
    if kind == "reach_log":
        return t >= 2 * (n + 1)
    if kind == "reach":
        # window (0, min{1/D, e^{-(n+1)}}]
        return 0 < t <= min(1.0 / D, math.exp(-(n + 1))) and t < 1
    return t >= math.exp(n + 1)


def tail_bound_cont(kind: str, params: Mapping, t: float) -> TailBound:
    """Continuous-model tail bounds.

    kind: ``cond_global`` P(cond_R >= t); ``cond_local`` P(cond(f, x) >= t);
    ``reach`` P(reach_R <= t) with t playing epsilon; ``reach_log``
    P(log2(1/reach_R) >= t) for uniform [-1, 1] dense tuples.
    ``params['p']`` fixes the subexponential order; the minimum over
    p in {1, 2, 4, 8, ln t} is always reported too (valid when every p
    applies, as for uniform coefficients).
    """
    if kind not in ("cond_global", "cond_local", "reach", "reach_log"):
        raise ConfigError("kind", f"unknown continuous tail bound {kind!r}")
    _need(params, "n", "q", "D")
    in_range = _cont_range(kind, params, t)
    if kind == "reach":
        defined = 0 < t < 1
    elif kind == "reach_log":
        defined = t > 0
    else:
        defined = t > 1
    p = params.get("p")
    if not defined:
        return TailBound(1.0, math.inf, False, p, math.inf)
    best = min(_cont_raw(kind, params, t, pc) for pc in p_candidates(1 / t if kind == "reach" else t))
    raw = _cont_raw(kind, params, t, p) if p is not None else best
    return TailBound(_clamp(raw, in_range), raw, in_range, p, best)


def _disc_range(kind: str, params: Mapping, t: float) -> bool:
    n, q, D, tau, M = (params.get(k) for k in ("n", "q", "D", "tau", "M"))
    if kind == "reach_log":
        B = math.comb(n + D, n)
        return max(math.log2(D), math.log2(n)) <= t <= math.log2(q * (n + 1) * B) + tau - 1
    if kind == "cond_global":
        return n <= t <= q * (n + 1) * M * 2.0 ** (tau - 2)
    if kind == "cond_local":
        return 0 < t <= q * (n + 1) * M * 2.0 ** (tau - 1)
    lo = 2.0 / (q * (n + 1) * M * 2.0**tau)
    return lo <= t <= min(1.0 / D, 1.0 / n)


def tail_bound_disc(kind: str, params: Mapping, t: float) -> TailBound:
    """Random-bit tail bounds (kinds as in :func:`tail_bound_cont`)."""
    if kind not in ("cond_global", "cond_local", "reach", "reach_log"):
        raise ConfigError("kind", f"unknown bit-model tail bound {kind!r}")
    n, q, D, tau = _need(params, "n", "q", "D", "tau")
    R = params.get("R", 1)
    if not t > 0:
        return TailBound(1.0, math.inf, False)
    if kind == "reach_log":
        B = math.comb(n + D, n)
        lv = (
            math.log(20 * R)
            + (n / 2 + 1) * math.log(n)
            + (q + n) * math.log(math.sqrt(2) * B)
            + (q + 2 * n) * math.log(D)
            - t * math.log(2)
        )
    else:
        (M,) = _need(params, "M")
        u = params.get("u", 0.0) or 0.0
        common = (q + n) * math.log(math.sqrt(2) * M) + (q + 2 * n) * math.log(D) + u
        if kind == "cond_global":
            lv = math.log(20 * R) + (n / 2 + 1) * math.log(n) + common - math.log(t)
        elif kind == "cond_local":
            x = params.get("x")
            h = 1.0 if x is None else max(1.0, float(np.max(np.abs(np.asarray(x, dtype=float)))))
            lv = math.log(6 * h) + (n / 2) * math.log(n) + common - (n + 1) * math.log(t)
        else:
            lv = math.log(20 * R) + (n / 2 + 1) * math.log(n) + common + math.log(t)
    raw = math.exp(min(lv, 700.0))
    in_range = _disc_range(kind, params, t)
    return TailBound(_clamp(raw, in_range), raw, in_range)


def theoretical_params(spec: RandomModelSpec, n: int, q: int, degrees: Sequence[int], R: float, x=None) -> dict:
    c = model_constants(spec, n, degrees)
    out = {"n": n, "q": q, "D": max(degrees), "R": R, "M": c.M, "x": x}
    if spec.kind in CONTINUOUS:
        out.update(L=c.L, rho=c.rho, p=spec.p if spec.p is not None else (2.0 if spec.kind == "gaussian" else None))
    else:
        out.update(tau=int(spec.tau), u=c.u)
    return out
