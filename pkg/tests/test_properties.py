"""Property-based checks with hypothesis."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from reachbound.condition import cond_local
from reachbound.linalg import minvalue_inf_two, opnorm_inf_two
from reachbound.parse import parse_poly_text
from reachbound.poly import (
    PolyTuple,
    all_monomials,
    evaluate,
    from_json,
    homogenize,
    one_norm,
    to_json,
    to_text,
)

coef = st.floats(-10, 10, allow_nan=False).filter(lambda c: c == 0 or abs(c) > 1e-6)


@st.composite
def tuples(draw, max_n=3, max_d=4):
    n = draw(st.integers(1, max_n))
    q = draw(st.integers(1, min(2, n)))
    degrees = [draw(st.integers(1, max_d)) for _ in range(q)]
    polys = []
    for d in degrees:
        monos = all_monomials(n, d)
        chosen = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=6, unique=True))
        polys.append({m: draw(coef) for m in chosen})
    return PolyTuple.from_terms(n, degrees, polys)


points = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3)
matrices = st.integers(1, 3).flatmap(
    lambda q: st.integers(q, 5).flatmap(
        lambda n: st.lists(st.floats(-5, 5, allow_nan=False), min_size=q * n, max_size=q * n).map(
            lambda v: np.array(v).reshape(q, n)
        )
    )
)


@settings(max_examples=60, deadline=None)
@given(tuples(), points)
def test_text_round_trip(f, x):
    g = parse_poly_text(to_text(f), n=f.n, degrees=list(f.degrees))
    x = np.array(x[: f.n])
    assert np.allclose(evaluate(g, x), evaluate(f, x), rtol=1e-12, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(tuples())
def test_json_round_trip(f):
    g = from_json(to_json(f))
    assert [dict(p) for p in g.coeffs] == [dict(p) for p in f.coeffs]


@settings(max_examples=60, deadline=None)
@given(tuples(), points)
def test_homogenization(f, x):
    x = np.array(x[: f.n])
    assert np.allclose(evaluate(homogenize(f), np.r_[1.0, x]), evaluate(f, x), rtol=1e-12, atol=1e-10)


@settings(max_examples=80, deadline=None)
@given(tuples(), points)
def test_cond_at_least_one(f, x):
    if one_norm(f) == 0:
        return
    assert cond_local(f, np.array(x[: f.n])).value >= 1 - 1e-12


@settings(max_examples=80, deadline=None)
@given(matrices, st.lists(st.floats(-1, 1, allow_nan=False), min_size=5, max_size=5))
def test_minvalue_below_any_rowspace_ratio(A, w):
    m = minvalue_inf_two(A)
    v = A.T @ np.array(w[: A.shape[0]])
    if np.linalg.norm(v) < 1e-9:
        return
    assert m <= np.abs(A @ v).max() / np.linalg.norm(v) * (1 + 1e-9) + 1e-12


@settings(max_examples=80, deadline=None)
@given(matrices, st.floats(0.1, 10))
def test_opnorm_homogeneous(A, s):
    a = opnorm_inf_two(A.T).upper
    b = opnorm_inf_two(s * A.T).upper
    assert math.isclose(b, s * a, rel_tol=1e-12, abs_tol=1e-12)
