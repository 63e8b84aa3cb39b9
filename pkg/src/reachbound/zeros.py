"""Zero tolerances and damped Gauss-Newton refinement onto Z(f)."""

from __future__ import annotations

import numpy as np

from .errors import NonSurjective
from .linalg import pseudoinverse
from .poly import PolyTuple, evaluate, jacobian, norm_h_inf, one_norm


def zero_tol(f: PolyTuple, x) -> float:
    """Default residual tolerance 1e-9 * (1 + ||f||_1 * ||x||_h^D)."""
    return 1e-9 * (1.0 + one_norm(f) * norm_h_inf(x) ** f.D)


def residual(f: PolyTuple, x) -> float:
    return float(np.max(np.abs(evaluate(f, x)))) if f.q else 0.0


def newton_refine(
    f: PolyTuple, x, tol: float | None = None, max_iter: int = 50
) -> tuple[np.ndarray, float, bool]:
    """Damped Newton with the Jacobian pseudoinverse (minimal-norm steps).

    Returns (point, residual, converged). Steps are halved (up to 20 times)
    until the residual decreases; a non-surjective Jacobian stops the
    iteration. Once within tolerance a few more full steps are taken while
    they keep reducing the residual.
    """
    x = np.asarray(x, dtype=float).reshape(-1).copy()
    r = residual(f, x)
    for _ in range(max_iter):
        t = zero_tol(f, x) if tol is None else tol
        if r <= t:
            break
        try:
            step = pseudoinverse(jacobian(f, x)) @ evaluate(f, x)
        except NonSurjective:
            break
        lam = 1.0
        for _ in range(20):
            y = x - lam * step
            ry = residual(f, y)
            if ry < r:
                break
            lam *= 0.5
        else:
            break
        x, r = y, ry
    t = zero_tol(f, x) if tol is None else tol
    if r <= t:
        x, r = _polish(f, x, r)
    return x, r, r <= t


def _polish(f: PolyTuple, x: np.ndarray, r: float, steps: int = 3) -> tuple[np.ndarray, float]:
    """A few undamped steps past the tolerance, kept only while they help."""
    for _ in range(steps):
        if r == 0.0:
            break
        try:
            y = x - pseudoinverse(jacobian(f, x)) @ evaluate(f, x)
        except NonSurjective:
            break
        ry = residual(f, y)
        if not ry < r:
            break
        x, r = y, ry
    return x, r
