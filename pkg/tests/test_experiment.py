import math

import numpy as np
import pytest

from reachbound.errors import ConfigError
from reachbound.experiment import (
    Geometry,
    TailCurve,
    TrialOptions,
    default_workers,
    mc_tail_experiment,
    run_trial,
    theoretical_curve,
)
from reachbound.random_models import RandomModelSpec

UNIFORM = RandomModelSpec("uniform_continuous")
BITS = RandomModelSpec("bit_uniform", tau=20)
G1 = Geometry(1, 1, (2,))


def test_geometry_validation():
    with pytest.raises(ConfigError):
        Geometry(1, 2, (2, 2))
    with pytest.raises(ConfigError):
        Geometry(2, 1, (2, 3))
    with pytest.raises(ConfigError):
        Geometry(2, 1, (2,), R=0.5)


def test_small_run_no_assertion():
    c = mc_tail_experiment(UNIFORM, G1, "log_inv_reach_R", [3], 10, seed=1, allow_small=True)
    assert c.trials == 10 and not c.powered and c.checks() == [None] and c.passed
    lo, hi = c.wilson
    assert hi[0] - lo[0] > 0.2


def test_min_trials_enforced():
    with pytest.raises(ConfigError):
        mc_tail_experiment(UNIFORM, G1, "log_inv_reach_R", [3], 10, seed=1)


def test_curve_shape_and_monotone():
    ts = [1, 2, 4, 6, 8]
    c = mc_tail_experiment(UNIFORM, G1, "log_inv_reach_R", ts, 200, seed=3)
    emp = c.empirical
    assert all(0 <= v <= 1 for v in emp)
    assert all(b <= a for a, b in zip(emp, emp[1:]))
    rows = c.rows()
    assert [r["t"] for r in rows] == ts
    header = c.to_csv().splitlines()[0].split(",")
    assert {"t", "empirical", "wilson_lo", "wilson_hi", "theoretical", "undecided"} <= set(header)


def test_exceed_counts_are_certified():
    # every trial counted as exceeding t must really have log2(1/reach_R) >= t,
    # i.e. its Federer upper bound on reach_R (lower bound on the statistic) is at least t
    ts = (2.0, 4.0)
    opt = TrialOptions(informative=ts)
    for k in range(60):
        r = run_trial((UNIFORM, G1, "log_inv_reach_R", ts, 5, k, opt))
        if r is None:
            continue
        exceed, undecided, lo, hi = r
        assert lo <= hi
        for t, e, u in zip(ts, exceed, undecided):
            assert not (e and u)
            if e:
                assert lo >= t


def test_cond_R_trials_bracket():
    geo = Geometry(2, 1, (2,))
    ts = (5.0, 50.0)
    for k in range(10):
        r = run_trial((UNIFORM, geo, "cond_R", ts, 7, k, TrialOptions()))
        assert r is not None and r[2] <= r[3]


def test_determinism_across_workers():
    ts = [2, 4, 8]
    a = mc_tail_experiment(UNIFORM, G1, "log_inv_reach_R", ts, 120, seed=11, workers=1)
    b = mc_tail_experiment(UNIFORM, G1, "log_inv_reach_R", ts, 120, seed=11, workers=2)
    assert (a.exceed, a.undecided, a.excluded) == (b.exceed, b.undecided, b.excluded)
    assert a.to_json() == b.to_json()
    c = mc_tail_experiment(UNIFORM, G1, "log_inv_reach_R", ts, 120, seed=12, workers=1)
    assert c.meta["seed"] == 12


def test_theoretical_curve_kinds():
    th = theoretical_curve(BITS, G1, "log_inv_reach_R", [0.5, 5, 30])
    assert [tb.in_range for tb in th] == [False, True, False]
    th = theoretical_curve(UNIFORM, Geometry(2, 1, (2,)), "cond_R", [5, 100])
    assert [tb.in_range for tb in th] == [False, True]
    th = theoretical_curve(RandomModelSpec("gaussian"), G1, "log_inv_reach_R", [20])
    assert 0 < th[0].raw < math.inf


def test_checks_policy():
    c = TailCurve("x", [1.0, 2.0], [0, 500], [0, 0], 1000, 0, [1.0, 0.1], [True, True], [1.0, 0.1])
    assert c.powered and c.checks() == [True, False] and not c.passed
    c = TailCurve("x", [1.0], [500], [0], 1000, 0, [0.1], [False], [0.1])
    assert c.checks() == [None] and c.passed


def test_wilson_matches_reference():
    from statsmodels.stats.proportion import proportion_confint

    c = TailCurve("x", [1.0], [37], [0], 1000, 0, [1.0], [True], [1.0])
    lo, hi = c.wilson
    rl, rh = proportion_confint(37, 1000, alpha=0.05, method="wilson")
    assert (lo[0], hi[0]) == pytest.approx((rl, rh))
    # independent closed form of the Wilson interval
    z, p, n = 1.959963984540054, 0.037, 1000
    mid = (p + z * z / (2 * n)) / (1 + z * z / n)
    rad = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    assert lo[0] == pytest.approx(mid - rad, rel=1e-9) and hi[0] == pytest.approx(mid + rad, rel=1e-9)


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("REACHBOUND_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("REACHBOUND_WORKERS", "zero")
    with pytest.raises(ConfigError):
        default_workers()
    monkeypatch.delenv("REACHBOUND_WORKERS")
    assert default_workers() >= 1


def test_bad_statistic():
    with pytest.raises(ConfigError):
        mc_tail_experiment(UNIFORM, G1, "median", [1], 100, seed=0)
