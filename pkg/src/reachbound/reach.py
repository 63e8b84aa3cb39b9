"""Certified lower bounds on the reach of Z(f): gamma, Kantorovich and condition routes.

Every bound here consumes *upper* bounds of gamma, K and cond, so the value
returned is always a valid lower bound on the (local or cube-restricted)
reach.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .condition import GlobalCondResult, cond_global, cond_local
from .errors import BudgetExceeded, NoRouteApplicable, NonSurjective, NotAZero
from .linalg import pseudoinverse, tensor_22_norm_bounds
from .poly import PolyTuple, derivative_tensor, evaluate, jacobian, norm_h_inf, one_norm
from .zeros import newton_refine, residual, zero_tol

log = logging.getLogger(__name__)

# optimum of 2t/(1-t)^3 = 1, the gamma route of the Kantorovich bound
T_STAR = 0.22908
ROUTES = ("gamma", "cond")


def ensure_zero(f: PolyTuple, x, tol: float | None = None) -> np.ndarray:
    """Return x (Newton-refined if needed) or raise NotAZero.

    Refinement is accepted only when it converges and moves the point by at
    most 1e-6 * ||x||_h in the inf-norm.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != f.n:
        raise ValueError(f"point has dimension {x.shape[0]}, expected {f.n}")
    t = zero_tol(f, x) if tol is None else tol
    r = residual(f, x)
    if r <= t:
        return x
    y, ry, ok = newton_refine(f, x, tol=t)
    if ok and np.max(np.abs(y - x)) <= 1e-6 * norm_h_inf(x):
        return y
    raise NotAZero(r, t)


def smale_beta(f: PolyTuple, x) -> float:
    """||D_xf^dagger f(x)||_2."""
    P = pseudoinverse(jacobian(f, x))
    return float(np.linalg.norm(P @ evaluate(f, x)))


@dataclass(frozen=True)
class GammaEstimate:
    """Bracket on gamma(f, x); ``upper`` is the value used for certification."""

    upper: float
    lower: float
    singular: bool
    orders: tuple = ()  # (order, lower, upper) per derivative order

    def to_dict(self) -> dict:
        return {
            "upper": self.upper,
            "lower": self.lower,
            "singular": self.singular,
            "orders": [list(o) for o in self.orders],
        }


def smale_gamma(f: PolyTuple, x, seed: int = 0) -> GammaEstimate:
    """max over orders l >= 2 of ||D_xf^dagger D^l_x f / l!||_{2,2}^{1/(l-1)}.

    A non-surjective Jacobian gives the conventional value 0 flagged singular.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    try:
        P = pseudoinverse(jacobian(f, x))
    except NonSurjective:
        return GammaEstimate(0.0, 0.0, True)
    up = lo = 0.0
    orders = []
    for order in range(2, f.D + 1):
        T = derivative_tensor(f, x, order)
        if T.is_zero:
            continue
        C = np.tensordot(P, T.entries, axes=(1, 0)) / math.factorial(order)
        b = tensor_22_norm_bounds(C, seed=seed)
        e = 1.0 / (order - 1)
        orders.append((order, b.lower**e, b.upper**e))
        up = max(up, b.upper**e)
        lo = max(lo, b.lower**e)
    return GammaEstimate(up, lo, False, tuple(orders))


def smale_gamma_upper(f: PolyTuple, x, seed: int = 0) -> float:
    return smale_gamma(f, x, seed).upper


def _require_surjective(f: PolyTuple, x: np.ndarray) -> None:
    pseudoinverse(jacobian(f, x))


def reach_lb_gamma(f: PolyTuple, zeta, tol: float | None = None) -> float:
    """1 / (5 gamma); +inf for an affine variety (gamma = 0)."""
    z = ensure_zero(f, zeta, tol)
    _require_surjective(f, z)
    g = smale_gamma_upper(f, z)
    return math.inf if g == 0.0 else 1.0 / (5.0 * g)


@dataclass(frozen=True)
class _KData:
    gamma: float
    cond_scale: float  # ||f||_1 / inverse_term, +inf when D_zf is singular
    h: float
    zinf: float
    D: int


def _k_data(f: PolyTuple, z: np.ndarray, routes) -> _KData:
    g = smale_gamma_upper(f, z) if "gamma" in routes else math.inf
    cs = math.inf
    if "cond" in routes:
        rep = cond_local(f, z)
        if rep.inverse_term > 0.0:
            cs = one_norm(f) / rep.inverse_term
    zinf = float(np.max(np.abs(z))) if z.size else 0.0
    return _KData(g, cs, norm_h_inf(z), zinf, f.D)


def _k_upper(k: _KData, r: float, routes) -> float:
    vals = []
    if "gamma" in routes and k.gamma * r < 1.0:
        vals.append(2.0 * k.gamma / (1.0 - k.gamma * r) ** 3)
    if "cond" in routes and math.isfinite(k.cond_scale):
        if k.D <= 1:
            vals.append(0.0)
        else:
            grow = max(1.0, k.zinf + r) / k.h
            vals.append(k.cond_scale / k.h * (k.D - 1) / k.D * grow ** (k.D - 2))
    if not vals:
        raise NoRouteApplicable(f"no route bounds K at radius {r}")
    return min(vals)


def kantorovich_K_upper(f: PolyTuple, zeta, r: float, routes=ROUTES) -> float:
    """Certified upper bound on K(f, zeta, r) = max_{||z-zeta||<=r} ||D_zeta f^dagger D^2_z f||.

    gamma route: 2 gamma / (1 - gamma r)^3, needs gamma r < 1.
    cond route: cond / h * (D-1)/D * (max(1, ||zeta||_inf + r) / h)^(D-2),
    from the 1-norm derivative bounds; needs D_zeta f surjective.
    The minimum over the applicable routes is returned.
    """
    z = np.asarray(zeta, dtype=float).reshape(-1)
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return _k_upper(_k_data(f, z, tuple(routes)), r, tuple(routes))


def reach_lb_kantorovich(
    f: PolyTuple, zeta, r_max: float = 1e6, routes=ROUTES, tol: float | None = None, iters: int = 40
) -> float:
    """Largest r <= r_max (to bisection accuracy) with K(f, zeta, r) r < 1.

    The bracket is located on powers of two independently of r_max and then
    bisected ``iters`` times, so the result is min(r*, r_max) with r* fixed,
    hence monotone in r_max.
    """
    routes = tuple(routes)
    z = ensure_zero(f, zeta, tol)
    _require_surjective(f, z)
    k = _k_data(f, z, routes)

    def ok(r: float) -> bool:
        try:
            return _k_upper(k, r, routes) * r < 1.0
        except NoRouteApplicable:
            return False

    if ok(r_max):
        return float(r_max)
    e = 0
    if ok(1.0):
        while ok(2.0 ** (e + 1)):
            e += 1
    else:
        while not ok(2.0 ** (e - 1)):
            e -= 1
            if e < -1070:
                return 0.0
        e -= 1
    lo, hi = 2.0**e, 2.0 ** (e + 1)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return min(lo, float(r_max))


def reach_lb_cond_local(f: PolyTuple, zeta, tol: float | None = None) -> float:
    """||zeta||_h / max{D - 2, cond(f, zeta)}; 0 at singular zeros."""
    z = ensure_zero(f, zeta, tol)
    c = cond_local(f, z).value
    denom = max(f.D - 2, c)
    return 0.0 if math.isinf(denom) else norm_h_inf(z) / denom


@dataclass(frozen=True)
class GlobalReachBound:
    value: float
    cond: GlobalCondResult | None
    diagnostic: str | None = None


def reach_lb_cond_global_detail(f: PolyTuple, R: float, **kwargs) -> GlobalReachBound:
    try:
        res = cond_global(f, R, **kwargs)
    except BudgetExceeded as exc:
        msg = f"cond_R refinement exhausted its budget ({exc.cells} cells); bound set to 0"
        log.warning(msg)
        return GlobalReachBound(0.0, exc.result, msg)
    denom = max(f.D - 2, res.upper)
    return GlobalReachBound(0.0 if math.isinf(denom) else 1.0 / denom, res)


def reach_lb_cond_global(f: PolyTuple, R: float, **kwargs) -> float:
    """1 / max{D - 2, cond_R upper}, a lower bound on reach_R(Z(f))."""
    return reach_lb_cond_global_detail(f, R, **kwargs).value


def worstcase_bit_bound(n: int, q: int, D: int, tau: int, R: int):
    """4n(2D)^{1+q+2n}(5 + tau + log R + 6n log D) + 2 log D + tau, base-2 logs.

    Bounds log2(1/reach_R) for integer tuples with coefficients of bit-size
    tau (unless reach_R = 0). Falls back to mpmath when a float overflows.
    """
    for name, v in (("n", n), ("q", q), ("D", D), ("R", R)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer")
    if int(tau) != tau or tau < 0:
        raise ValueError("tau must be a nonnegative integer")
    lead = 4 * n * (2 * D) ** (1 + q + 2 * n)
    inner = 5 + tau + math.log2(R) + 6 * n * math.log2(D)
    tail = 2 * math.log2(D) + tau
    try:
        val = float(lead) * inner + tail
        if math.isfinite(val):
            return val
    except OverflowError:
        pass
    import mpmath

    return mpmath.mpf(lead) * inner + tail


@dataclass(frozen=True)
class ReachBoundReport:
    point: tuple | None = None
    R: float | None = None
    gamma_value: float | None = None
    gamma_lower: float | None = None
    beta_value: float | None = None
    alpha_value: float | None = None
    cond_value: float | None = None
    cond_R_lower: float | None = None
    cond_R_upper: float | None = None
    bound_gamma: float | None = None
    bound_kantorovich: float | None = None
    bound_cond_local: float | None = None
    bound_cond_global: float | None = None
    diagnostics: tuple = field(default=())

    BOUND_FIELDS = ("bound_gamma", "bound_kantorovich", "bound_cond_local", "bound_cond_global")

    def routes(self) -> list[tuple[str, float]]:
        return [(k[6:], getattr(self, k)) for k in self.BOUND_FIELDS if getattr(self, k) is not None]

    @property
    def best(self) -> float | None:
        vals = [v for _, v in self.routes()]
        return max(vals) if vals else None

    @property
    def best_route(self) -> str | None:
        r = self.routes()
        return max(r, key=lambda kv: kv[1])[0] if r else None

    def to_dict(self) -> dict:
        out = {
            "point": None if self.point is None else list(self.point),
            "R": self.R,
            "gamma_value": self.gamma_value,
            "gamma_lower": self.gamma_lower,
            "beta_value": self.beta_value,
            "alpha_value": self.alpha_value,
            "cond": self.cond_value,
            "cond_R_lower": self.cond_R_lower,
            "cond_R_upper": self.cond_R_upper,
        }
        for k in self.BOUND_FIELDS:
            out[k] = getattr(self, k)
        out["best"] = self.best
        out["best_route"] = self.best_route
        out["diagnostics"] = list(self.diagnostics)
        return out


def reach_bounds(
    f: PolyTuple,
    point=None,
    R: float | None = None,
    r_max: float = 1e6,
    tol: float | None = None,
    seed: int = 0,
    **cond_kwargs,
) -> ReachBoundReport:
    """Every applicable bound: local routes at ``point``, the global route over [-R, R]^n."""
    if point is None and R is None:
        raise ValueError("need a point, a radius R, or both")
    kw: dict = {}
    diags = []
    if point is not None:
        z = ensure_zero(f, point, tol)
        _require_surjective(f, z)
        g = smale_gamma(f, z, seed)
        beta = smale_beta(f, z)
        rep = cond_local(f, z)
        kw.update(
            point=tuple(float(v) for v in z),
            gamma_value=g.upper,
            gamma_lower=g.lower,
            beta_value=beta,
            alpha_value=beta * g.upper,
            cond_value=rep.value,
            bound_gamma=math.inf if g.upper == 0.0 else 1.0 / (5.0 * g.upper),
            bound_kantorovich=reach_lb_kantorovich(f, z, r_max=r_max, tol=tol),
            bound_cond_local=reach_lb_cond_local(f, z, tol),
        )
    if R is not None:
        gb = reach_lb_cond_global_detail(f, R, **cond_kwargs)
        kw.update(R=float(R), bound_cond_global=gb.value)
        if gb.cond is not None:
            kw.update(cond_R_lower=gb.cond.lower, cond_R_upper=gb.cond.upper)
        if gb.diagnostic:
            diags.append(gb.diagnostic)
    return ReachBoundReport(diagnostics=tuple(diags), **kw)
