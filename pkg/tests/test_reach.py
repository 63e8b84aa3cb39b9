import math

import mpmath
import numpy as np
import pytest

from reachbound.condition import cond_local
from reachbound.errors import NoRouteApplicable, NonSurjective, NotAZero
from reachbound.parse import parse_poly_text
from reachbound.poly import norm_h_inf, one_norm
from reachbound.reach import (
    T_STAR,
    ReachBoundReport,
    kantorovich_K_upper,
    reach_bounds,
    reach_lb_cond_global,
    reach_lb_cond_global_detail,
    reach_lb_cond_local,
    reach_lb_gamma,
    reach_lb_kantorovich,
    smale_beta,
    smale_gamma,
    smale_gamma_upper,
    worstcase_bit_bound,
)

from conftest import random_tuple, with_zero_at

LINEAR = "x0 + x1"


def _dist_to_segment(p, half):
    return math.hypot(p[0] - max(-half, min(half, p[0])), p[1])


# local reach oracles from the medial axes of the benchmark curves
def circle_local(p):
    return 1.0


def ellipse_local(p):
    # 0.25 x^2 + y^2 = 1 (a=2, b=1): medial axis is the segment |x| <= a - b^2/a = 1.5 on y=0
    return _dist_to_segment(p, 1.5)


def parabola_local(p):
    # y = x^2: medial axis is the ray x=0, y >= 1/2
    x, y = p
    return math.hypot(x, y - max(0.5, y))


def benchmark_points():
    ts = np.linspace(0, 2 * np.pi, 13)[:-1]
    yield "x0^2 + x1^2 - 1", [(math.cos(t), math.sin(t)) for t in ts], circle_local
    yield "0.25*x0^2 + x1^2 - 1", [(2 * math.cos(t), math.sin(t)) for t in ts], ellipse_local
    yield "x1 - x0^2", [(x, x * x) for x in np.linspace(-1.5, 1.5, 13)], parabola_local


# -- beta / gamma ------------------------------------------------------------------


def test_beta_examples(circle):
    assert smale_beta(circle, [1, 0]) == 0
    assert smale_beta(circle, [2, 0]) == pytest.approx(0.75)
    assert smale_beta(parse_poly_text("x0"), [1]) == pytest.approx(1)
    with pytest.raises(NonSurjective):
        smale_beta(parse_poly_text("x0^2"), [0])


def test_gamma_examples(circle):
    g = smale_gamma(circle, [1, 0])
    assert g.upper == pytest.approx(0.5, abs=1e-12) and g.lower == pytest.approx(0.5, abs=1e-8)
    assert smale_gamma_upper(parse_poly_text(LINEAR), [3.0, -3.0]) == 0
    g = smale_gamma(parse_poly_text("x0^2"), [0])
    assert g.upper == 0 and g.singular


def test_gamma_bracket_random(rng):
    for _ in range(50):
        f = random_tuple(rng, dmax=4)
        x = rng.uniform(-1, 1, f.n)
        g = smale_gamma(f, x)
        assert 0 <= g.lower <= g.upper * (1 + 1e-12)


def test_gamma_exponent_units():
    # scaling the variables x -> s*x scales gamma by 1/s only with the 1/(l-1) exponent
    f = parse_poly_text("x0^3 + x1 - 1")
    g = parse_poly_text("8*x0^3 + 2*x1 - 1")  # f(2x)
    z = np.array([0.5, 0.25])
    assert smale_gamma_upper(g, z / 2) == pytest.approx(2 * smale_gamma_upper(f, z), rel=1e-9)


# -- reach_lb_gamma ------------------------------------------------------------------


def test_reach_lb_gamma_examples(circle, parabola):
    assert reach_lb_gamma(circle, [1, 0]) == pytest.approx(0.4, abs=1e-9)
    assert math.isinf(reach_lb_gamma(parse_poly_text(LINEAR), [1.0, -1.0]))
    assert reach_lb_gamma(parabola, [0, 0]) == pytest.approx(0.2, abs=1e-9)


def test_reach_lb_gamma_not_a_zero(circle):
    with pytest.raises(NotAZero):
        reach_lb_gamma(circle, [0.5, 0.0])


def test_near_zero_is_refined(circle):
    assert reach_lb_gamma(circle, [1 + 1e-9, 0]) == pytest.approx(0.4, abs=1e-8)


# -- Kantorovich -------------------------------------------------------------------


def test_K_examples(circle):
    assert kantorovich_K_upper(circle, [1, 0], 0.5, routes=("gamma",)) == pytest.approx(64 / 27, rel=1e-9)
    assert kantorovich_K_upper(parse_poly_text(LINEAR), [0, 0], 5.0) == 0
    with pytest.raises(NoRouteApplicable):
        kantorovich_K_upper(circle, [1, 0], 3.0, routes=("gamma",))


def test_K_cond_route_dominates_hessian_oracle(circle, parabola):
    # the Hessians are constant, so K = ||pinv(D_zeta f)||_2 * ||D^2 f||_2 (rank-one output)
    for f, zeta in ((circle, np.array([1.0, 0.0])), (parabola, np.array([0.5, 0.25]))):
        P = np.linalg.pinv(np.array([[2 * zeta[0], 2 * zeta[1]]]) if f is circle else np.array([[-2 * zeta[0], 1.0]]))
        H = 2 * np.eye(2) if f is circle else np.array([[-2.0, 0.0], [0.0, 0.0]])
        oracle = np.linalg.norm(P) * np.linalg.norm(H, 2)
        for r in (0.1, 0.3, 1.0, 3.0):
            try:
                K = kantorovich_K_upper(f, zeta, r)
            except NoRouteApplicable:
                continue
            assert K >= oracle * (1 - 1e-9)


def test_kantorovich_examples(circle):
    r = reach_lb_kantorovich(circle, [1, 0], routes=("gamma",))
    assert r == pytest.approx(T_STAR / 0.5, rel=1e-3)
    assert reach_lb_kantorovich(parse_poly_text(LINEAR), [0, 0], r_max=123.0) == 123.0
    with pytest.raises(NonSurjective):
        reach_lb_kantorovich(parse_poly_text("x0^2 - x1^2"), [0, 0])


def test_kantorovich_monotone_in_rmax(circle):
    vals = [reach_lb_kantorovich(circle, [0, 1], r_max=m) for m in (0.1, 0.3, 1.0, 10.0)]
    assert vals == sorted(vals)
    assert vals[0] == 0.1


def test_kantorovich_beats_gamma_bound(rng):
    checked = 0
    while checked < 30:
        n = int(rng.integers(1, 5))
        x = rng.uniform(-1, 1, n)
        f = with_zero_at(random_tuple(rng, n=n, dmax=4), x)
        try:
            g = reach_lb_gamma(f, x)
            k = reach_lb_kantorovich(f, x, routes=("gamma",))
        except (NonSurjective, NotAZero):
            continue
        if math.isinf(g):
            continue
        assert k >= g * 5 * T_STAR * (1 - 1e-3)
        checked += 1


# -- condition routes ----------------------------------------------------------------


def test_cond_local_bound_examples(circle):
    assert reach_lb_cond_local(circle, [1, 0]) == pytest.approx(1 / 6)
    assert reach_lb_cond_local(parse_poly_text("x0"), [0]) == pytest.approx(1)
    assert reach_lb_cond_local(parse_poly_text("x0^2"), [0]) == 0


def test_cond_global_bound_examples(circle):
    b = reach_lb_cond_global(circle, 2.0)
    assert 0 < b <= 1 / 6
    lines = parse_poly_text("x0^2 - x0", n=2)
    vals = [reach_lb_cond_global(lines, R, target_rel_err=0.25) for R in (1, 10, 100)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 0.01
    lin = parse_poly_text(LINEAR)
    d = reach_lb_cond_global_detail(lin, 3.0)
    assert math.isfinite(d.cond.upper) and d.value == pytest.approx(1 / max(-1, d.cond.upper))
    # dense-grid oracle for the linear case: cond is largest where the residual vanishes
    g = np.linspace(-3, 3, 301)
    X = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    h = np.maximum(1, np.abs(X).max(1))
    oracle = (2 / np.maximum(np.abs(X.sum(1)) / h, np.sqrt(2))).max()
    assert d.cond.lower <= d.cond.upper and oracle <= d.cond.upper * (1 + 1e-12)


def test_cond_global_budget_gives_zero(circle):
    d = reach_lb_cond_global_detail(circle, 2.0, target_rel_err=1e-6, cell_budget=20)
    assert d.value == 0 and d.diagnostic


# -- worst case -----------------------------------------------------------------------


def _formula(n, q, D, tau, R):
    lg = mpmath.log
    return 4 * n * (2 * D) ** (1 + q + 2 * n) * (5 + tau + lg(R, 2) + 6 * n * lg(D, 2)) + 2 * lg(D, 2) + tau


def test_worstcase_examples():
    assert worstcase_bit_bound(1, 1, 2, 1, 1) == 12291
    # 4 * 1 * 2^(1+1+2) * 5 + 0 + 0
    assert worstcase_bit_bound(1, 1, 1, 0, 1) == 320
    a, b = worstcase_bit_bound(2, 1, 3, 5, 4), worstcase_bit_bound(2, 1, 3, 6, 4)
    assert b - a == pytest.approx(4 * 2 * 6 ** (1 + 1 + 4) + 1)


@pytest.mark.parametrize("args", [(2, 2, 3, 7, 5), (3, 1, 4, 20, 16), (1, 1, 5, 3, 2)])
def test_worstcase_matches_formula(args):
    assert float(worstcase_bit_bound(*args)) == pytest.approx(float(_formula(*args)), rel=1e-12)


def test_worstcase_overflow_falls_back():
    v = worstcase_bit_bound(60, 60, 10**6, 1, 1)
    assert isinstance(v, mpmath.mpf) and v > mpmath.mpf(10) ** 300


def test_worstcase_validation():
    with pytest.raises(ValueError):
        worstcase_bit_bound(0, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        worstcase_bit_bound(1, 1, 1, -1, 1)


# -- reports, sandwich, invariances ------------------------------------------------------


def test_report_circle(circle):
    rep = reach_bounds(circle, point=[1, 0], R=2.0)
    assert isinstance(rep, ReachBoundReport)
    assert rep.bound_gamma == pytest.approx(0.4, abs=1e-9)
    assert rep.bound_cond_local == pytest.approx(1 / 6, abs=1e-9)
    assert 0 < rep.bound_cond_global <= 1 / 6
    assert rep.best == max(v for _, v in rep.routes()) and rep.best <= 1
    assert rep.alpha_value == pytest.approx(rep.beta_value * rep.gamma_value)
    d = rep.to_dict()
    assert d["best_route"] == rep.best_route


def test_report_global_only(circle):
    rep = reach_bounds(circle, R=1.0)
    assert rep.point is None and [k for k, _ in rep.routes()] == ["cond_global"]


def test_sandwich_benchmarks():
    for text, points, local in benchmark_points():
        f = parse_poly_text(text)
        for p in points:
            rep = reach_bounds(f, point=p)
            for route, value in rep.routes():
                assert 0 <= value <= local(p) * (1 + 1e-9), (text, p, route, value)
        rep = reach_bounds(f, R=2.0)
        assert rep.bound_cond_global <= min(local(p) for p in points if max(map(abs, p)) <= 2) + 1e-12


def test_sandwich_sphere(sphere):
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = rng.standard_normal(3)
        p /= np.linalg.norm(p)
        for _, v in reach_bounds(sphere, point=p).routes():
            assert 0 <= v <= 1 + 1e-9


def test_scale_invariance(rng):
    checked = 0
    while checked < 20:
        n = int(rng.integers(1, 4))
        x = rng.uniform(-1, 1, n)
        f = with_zero_at(random_tuple(rng, n=n, dmax=3), x)
        try:
            a = reach_bounds(f, point=x)
        except (NonSurjective, NotAZero):
            continue
        b = reach_bounds(f.scaled(-3.7), point=x)
        for (ka, va), (kb, vb) in zip(a.routes(), b.routes()):
            assert ka == kb and (va == vb or va == pytest.approx(vb, rel=1e-12, abs=1e-12))
        checked += 1


def test_property_e_bridge(rng):
    frob_violations = 0
    checked = 0
    while checked < 300:
        f = random_tuple(rng, dmax=4)
        x = rng.uniform(-2, 2, f.n)
        rep = cond_local(f, x)
        if not math.isfinite(rep.value) or rep.value * rep.residual_term / one_norm(f) >= 1 - 1e-9:
            continue
        g = smale_gamma(f, x)
        rhs = f.D * rep.value / norm_h_inf(x)
        assert g.lower <= rhs * (1 + 1e-9)
        frob_violations += g.upper > rhs * (1 + 1e-9)
        checked += 1
    assert frob_violations <= checked
