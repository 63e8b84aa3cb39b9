"""The 1-condition number: local, homogeneous, and certified global brackets over a cube."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, NotOnBoundary
from .linalg import minvalue_inf_two, minvalue_inf_two_many
from .poly import PolyTuple, evaluate, evaluate_many, jacobian, jacobian_many, norm_h_inf, one_norm

COND_CAP = 1e12
# absolute slack on 1/cond for floating-point error in the certificate
_LIP_SLACK = 1e-13


@dataclass(frozen=True)
class ConditionReport:
    point: tuple
    residual_term: float
    inverse_term: float
    value: float
    surjective: bool

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "residual_term": self.residual_term,
            "inverse_term": self.inverse_term,
            "cond": self.value,
        }


def _check_degrees(f: PolyTuple) -> np.ndarray:
    d = f.delta
    if (d < 1).any():
        raise ValueError("condition numbers need every degree >= 1")
    return d


def _ratio(norm: float, denom: float) -> float:
    if denom == 0.0 or norm == 0.0:
        return math.inf
    return norm / denom


def cond_local(f: PolyTuple, x) -> ConditionReport:
    x = np.asarray(x, dtype=float).reshape(-1)
    d = _check_degrees(f)
    h = norm_h_inf(x)
    residual = float(np.max(np.abs(evaluate(f, x)) / (d * h**d)))
    B = jacobian(f, x) / (d**2 * h ** (d - 1))[:, None]
    inverse = minvalue_inf_two(B)
    value = _ratio(one_norm(f), max(residual, inverse))
    return ConditionReport(tuple(float(v) for v in x), residual, inverse, value, inverse > 0.0)


def cond_homog(f: PolyTuple, z) -> float:
    """Condition number at a point z of the cube boundary in homogeneous coordinates.

    Equals ``cond_local(f, z[1:] / z[0])`` whenever z[0] > 0; points with
    z[0] == 0 lie at infinity.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != f.n + 1:
        raise ValueError(f"homogeneous point must have dimension {f.n + 1}")
    if abs(np.max(np.abs(z)) - 1.0) > 1e-12:
        raise NotOnBoundary(f"||z||_inf = {np.max(np.abs(z))} is not 1")
    d = _check_degrees(f)
    fh = f.homogeneous
    residual = float(np.max(np.abs(evaluate(fh, z)) / d))
    B = jacobian(fh, z)[:, 1:] / (d**2)[:, None]
    return _ratio(one_norm(f), max(residual, minvalue_inf_two(B)))


def inv_cond_homog_many(f: PolyTuple, Z: np.ndarray) -> np.ndarray:
    """1/cond^h at each row of Z (no boundary check); 1-Lipschitz in the inf-norm."""
    d = _check_degrees(f)
    nf = one_norm(f)
    if nf == 0.0:
        return np.zeros(Z.shape[0])
    fh = f.homogeneous
    residual = np.max(np.abs(evaluate_many(fh, Z)) / d, axis=1)
    B = jacobian_many(fh, Z)[:, :, 1:] / (d**2)[None, :, None]
    inverse = minvalue_inf_two_many(B)
    return np.maximum(residual, inverse) / nf


@dataclass(frozen=True)
class GlobalCondResult:
    R: float
    lower: float
    upper: float
    grid_cells: int
    max_witness: tuple
    witness_z: tuple = field(default=())
    rounds: int = 0
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "lower": self.lower,
            "upper": self.upper,
            "cells": self.grid_cells,
            "witness": list(self.max_witness),
        }


def _faces(n: int, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Centers and half-widths of the faces of the boundary region {z0 >= 1/R}."""
    centers = []
    halves = []
    top_c = np.zeros(n + 1)
    top_c[0] = 1.0
    top_h = np.ones(n + 1)
    top_h[0] = 0.0
    centers.append(top_c)
    halves.append(top_h)
    z0_lo = 0.0 if math.isinf(R) else 1.0 / R
    if z0_lo < 1.0:
        for k in range(1, n + 1):
            for s in (1.0, -1.0):
                c = np.zeros(n + 1)
                hw = np.ones(n + 1)
                c[0] = 0.5 * (1.0 + z0_lo)
                hw[0] = 0.5 * (1.0 - z0_lo)
                c[k] = s
                hw[k] = 0.0
                centers.append(c)
                halves.append(hw)
    return np.array(centers), np.array(halves)


def _split(C: np.ndarray, Hw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bisect every free coordinate of every cell (children keep parent order)."""
    dim = C.shape[1]
    masks = Hw > 0
    out_c = np.empty((0, dim))
    out_h = np.empty((0, dim))
    order = np.empty(0, dtype=np.int64)
    codes = masks @ (1 << np.arange(dim))
    for code in np.unique(codes):
        rows = np.nonzero(codes == code)[0]
        mask = masks[rows[0]]
        free = np.nonzero(mask)[0]
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=len(free)))).reshape(-1, len(free))
        offs = np.zeros((signs.shape[0], dim))
        offs[:, free] = signs
        new_h = Hw[rows] * 0.5 + Hw[rows] * (~mask) * 0.5
        kids = C[rows][:, None, :] + offs[None] * new_h[:, None, :]
        out_c = np.vstack([out_c, kids.reshape(-1, dim)])
        out_h = np.vstack([out_h, np.repeat(new_h, signs.shape[0], axis=0)])
        order = np.concatenate([order, np.repeat(rows, signs.shape[0])])
    perm = np.argsort(order, kind="stable")
    return out_c[perm], out_h[perm]


def cond_global(
    f: PolyTuple,
    R: float,
    target_rel_err: float = 0.05,
    cell_budget: int = 10**7,
    cap: float = COND_CAP,
    stop_below: float | None = None,
    stop_above: float | None = None,
) -> GlobalCondResult:
    """Certified bracket [lower, upper] on sup_{||x||_inf <= R} cond(f, x).

    Cells tile the boundary of the homogeneous cube restricted to
    z0 >= 1/R. Since z -> 1/cond^h(f, z) is 1-Lipschitz in the inf-norm, a
    cell with center c and radius h satisfies cond^h <= 1/(1/cond^h(c) - h)
    throughout. Cells are bisected in rounds until the bracket meets
    ``target_rel_err``; the lower end is the largest value seen at a center.

    ``stop_below`` / ``stop_above`` end the refinement early (flagged as not
    converged) once the certified upper end drops below, or the lower end
    reaches, the given value; callers deciding a threshold need no more.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if not 0 < target_rel_err < 1:
        raise ValueError("target_rel_err must lie in (0, 1)")
    C, Hw = _faces(f.n, R)
    lower = -math.inf
    witness = C[0]
    settled_upper = 0.0
    cells = 0
    rounds = 0

    def result(up: float, converged: bool = True) -> GlobalCondResult:
        z0 = witness[0]
        x = tuple(float(v) for v in (witness[1:] / z0)) if z0 > 0 else tuple(math.inf for _ in witness[1:])
        wz = tuple(float(v) for v in witness)
        return GlobalCondResult(float(R), float(lower), float(up), cells, x, wz, rounds, converged)

    while True:
        rounds += 1
        cells += C.shape[0]
        g = inv_cond_homog_many(f, C)
        with np.errstate(divide="ignore"):
            cond_c = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0), math.inf)
        i = int(np.argmax(cond_c))
        if cond_c[i] > lower:
            lower = float(cond_c[i])
            witness = C[i]
        if math.isinf(lower):
            return result(math.inf)
        if lower >= cap:
            return result(math.inf)
        h = Hw.max(axis=1)
        margin = g - h - _LIP_SLACK
        with np.errstate(divide="ignore"):
            cell_up = np.where(margin > 0, 1.0 / np.where(margin > 0, margin, 1.0), math.inf)
        threshold = (1.0 + target_rel_err) * lower
        todo = cell_up > threshold
        if (~todo).any():
            settled_upper = max(settled_upper, float(cell_up[~todo].max()))
        if not todo.any():
            return result(max(settled_upper, lower))
        current_up = max(settled_upper, float(cell_up[todo].max()))
        if (stop_below is not None and current_up < stop_below) or (
            stop_above is not None and lower >= stop_above
        ):
            return result(current_up, False)
        if h[todo].min() < 1e-13:
            return result(math.inf, False)
        if cells >= cell_budget:
            raise BudgetExceeded(cells, result(current_up, False))
        C, Hw = _split(C[todo], Hw[todo])


def dist_to_singular_bounds(f: PolyTuple, R: float, **kwargs) -> tuple[float, float]:
    """Interval for the 1-distance from Delta^{-1} f to the ill-posed set over [-R, R]^n.

    Rearranges ||f||_1 / dist <= cond_R(f) <= (1 + D) ||f||_1 / dist using
    the certified cond_R bracket.
    """
    res = cond_global(f, R, **kwargs)
    nf = one_norm(f)
    lo = 0.0 if math.isinf(res.upper) else nf / res.upper
    hi = 0.0 if math.isinf(res.lower) else (1 + f.D) * nf / res.lower
    return lo, hi
