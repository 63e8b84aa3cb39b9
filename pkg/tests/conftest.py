import math

import numpy as np
import pytest

from reachbound.parse import parse_poly_text
from reachbound.poly import PolyTuple, all_monomials


def random_tuple(rng, n=None, q=None, dmax=5, density=0.6, integer=False):
    """Random tuple with n <= 4, q <= min(3, n), degrees <= dmax, sparse supports."""
    n = n or int(rng.integers(1, 5))
    q = q or int(rng.integers(1, min(3, n) + 1))
    degrees = [int(rng.integers(1, dmax + 1)) for _ in range(q)]
    polys = []
    for d in degrees:
        monos = all_monomials(n, d)
        keep = [m for m in monos if rng.random() < density] or [monos[-1]]
        if integer:
            polys.append({m: float(rng.integers(-9, 10)) for m in keep})
        else:
            polys.append({m: float(rng.uniform(-1, 1)) for m in keep})
    return PolyTuple.from_terms(n, degrees, polys)


def with_zero_at(f, x):
    """Shift constant terms so that x is a zero of the returned tuple."""
    from reachbound.poly import evaluate

    vals = evaluate(f, x)
    polys = []
    for p, v in zip(f.coeffs, vals):
        p = dict(p)
        c0 = (0,) * f.n
        p[c0] = p.get(c0, 0.0) - float(v)
        polys.append(p)
    return PolyTuple.from_terms(f.n, f.degrees, polys)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def circle():
    return parse_poly_text("x0^2 + x1^2 - 1")


@pytest.fixture
def sphere():
    return parse_poly_text("x0^2 + x1^2 + x2^2 - 1")


@pytest.fixture
def ellipse():
    # x^2/4 + y^2 = 1, reach b^2/a = 1/2
    return parse_poly_text("0.25*x0^2 + x1^2 - 1")


@pytest.fixture
def parabola():
    return parse_poly_text("x1 - x0^2")


def close(a, b, rel=1e-9, abs_=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


def sphere_min(A, rng, samples=100_000, rounds=4):
    """Sampling oracle for min ||Av||_inf over unit v in the row space of A.

    The sample budget is split over rounds: the first is uniform on the
    sphere, later ones are Gaussian clouds around the incumbent with
    shrinking spread. Every candidate is a genuine unit vector, so the
    result can only overestimate the true minimum.
    """
    _, s, Vt = np.linalg.svd(A, full_matrices=False)
    Q = Vt[s > 1e-12].T
    k = Q.shape[1]
    per = samples // rounds
    best_u, best = None, math.inf
    for r in range(rounds):
        if r == 0:
            U = rng.standard_normal((per, k))
        else:
            U = best_u + (10.0 ** -r) * rng.standard_normal((per, k))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        vals = np.abs(U @ (A @ Q).T).max(axis=1)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, best_u = float(vals[j]), U[j]
    return best


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number, title, ok, detail=""):
        line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
