"""Monte Carlo comparison of empirical tails with the closed-form bounds.

Each trial samples a tuple from ``SeedSequence([seed, trial])`` and brackets
its statistic with certified bounds. A threshold t counts as exceeded only
when the bracket forces it; trials whose bracket straddles t are reported as
undecided and added to the exceedance count for the soundness check, so the
check is never optimistic. Aggregation is an order-independent sum, hence
independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .condition import cond_global, cond_local
from .errors import BudgetExceeded, ConfigError, EmptySample, NoAdmissiblePairs, ReachBoundError
from .federer import estimate_reach, sample_variety
from .random_models import (
    CONTINUOUS,
    RandomModelSpec,
    sample_tuple,
    tail_bound_cont,
    tail_bound_disc,
    theoretical_params,
)

STATISTICS = ("cond_R", "cond_local", "log_inv_reach_R")
MIN_TRIALS = 100
POWERED_TRIALS = 1000


@dataclass(frozen=True)
class Geometry:
    n: int
    q: int
    degrees: tuple
    R: float = 1.0
    x: tuple | None = None  # base point for the cond_local statistic

    def __post_init__(self):
        if self.n < 1 or self.q < 1 or self.q > self.n:
            raise ConfigError("geometry", "need 1 <= q <= n")
        if len(self.degrees) != self.q or any(d < 1 for d in self.degrees):
            raise ConfigError("geometry.degrees", f"need {self.q} positive degrees")
        if self.R < 1:
            raise ConfigError("geometry.R", "must be >= 1")
        if self.x is not None and len(self.x) != self.n:
            raise ConfigError("geometry.x", f"must have {self.n} coordinates")

    @property
    def D(self) -> int:
        return max(self.degrees)

    def to_dict(self) -> dict:
        out = {"n": self.n, "q": self.q, "degrees": list(self.degrees), "R": self.R}
        if self.x is not None:
            out["x"] = list(self.x)
        return out


@dataclass(frozen=True)
class TrialOptions:
    target_rel_err: float = 0.25
    cell_budget: int = 2 * 10**6
    federer_samples: int = 200
    informative: tuple = ()  # thresholds worth resolving with the sampler


def _bracket_cond_R(f, geo: Geometry, ts: Sequence[float], opt: TrialOptions) -> tuple[float, float]:
    try:
        r = cond_global(
            f,
            geo.R,
            target_rel_err=opt.target_rel_err,
            cell_budget=opt.cell_budget,
            stop_below=min(ts),
            stop_above=max(ts),
        )
    except BudgetExceeded as exc:
        r = exc.result
    return r.lower, r.upper


def _bracket_log_inv_reach(f, geo: Geometry, ts: Sequence[float], opt: TrialOptions, seed) -> tuple[float, float]:
    # log2(1/reach_R) <= log2 max{D-2, cond_R}, from the certified lower bound on reach
    thr = 2.0 ** min(ts)
    try:
        r = cond_global(
            f, geo.R, target_rel_err=opt.target_rel_err, cell_budget=opt.cell_budget, stop_below=thr
        )
        up = r.upper
    except BudgetExceeded as exc:
        up = exc.result.upper
    denom = max(geo.D - 2, up)
    hi = math.inf if math.isinf(denom) else math.log2(denom)
    lo = -math.inf
    pending = [t for t in opt.informative if hi >= t]
    if pending and opt.federer_samples > 0:
        # a sampled pair quotient bounds reach_R from above, i.e. the statistic from below
        try:
            S = sample_variety(f, geo.R, opt.federer_samples, seed=seed)
            est = estimate_reach(S).estimate
            if est > 0 and math.isfinite(est):
                lo = math.log2(1.0 / est)
        except (EmptySample, NoAdmissiblePairs):
            pass
    return lo, hi


def run_trial(task: tuple) -> tuple | None:
    """One trial -> (exceed flags, undecided flags, lo, hi), or None when it failed."""
    spec, geo, statistic, ts, seed, trial, opt = task
    ss = np.random.SeedSequence([seed, trial])
    try:
        f = sample_tuple(spec, geo.degrees, geo.n, geo.q, ss)
        if statistic == "cond_R":
            lo, hi = _bracket_cond_R(f, geo, ts, opt)
        elif statistic == "cond_local":
            v = cond_local(f, np.zeros(geo.n) if geo.x is None else np.asarray(geo.x)).value
            lo = hi = v
        else:
            lo, hi = _bracket_log_inv_reach(f, geo, ts, opt, [seed, trial])
    except (ReachBoundError, ValueError, np.linalg.LinAlgError, FloatingPointError):
        return None
    exceed = tuple(bool(lo >= t) for t in ts)
    undecided = tuple(bool(lo < t <= hi) for t in ts)
    return exceed, undecided, lo, hi


def theoretical_curve(spec: RandomModelSpec, geo: Geometry, statistic: str, ts: Sequence[float]) -> list:
    """Bound on P(statistic >= t) at each t, as TailBound records."""
    params = theoretical_params(spec, geo.n, geo.q, geo.degrees, geo.R, geo.x)
    cont = spec.kind in CONTINUOUS
    fn = tail_bound_cont if cont else tail_bound_disc
    dense = spec.supports is None
    out = []
    for t in ts:
        if statistic == "cond_R":
            out.append(fn("cond_global", params, t))
        elif statistic == "cond_local":
            out.append(fn("cond_local", params, t))
        elif dense and spec.kind in ("uniform_continuous", "bit_uniform"):
            out.append(fn("reach_log", params, t))
        else:
            out.append(fn("reach", params, 2.0**-t))
    return out


def _used_bound(tb) -> float:
    """The clamped value compared against: min over p when p is free."""
    if not tb.in_range:
        return 1.0
    raw = tb.raw if tb.p is not None or tb.min_over_p is None else tb.min_over_p
    return min(1.0, raw) if math.isfinite(raw) else 1.0


@dataclass
class TailCurve:
    statistic: str
    t_values: list
    exceed: list
    undecided: list
    trials: int
    excluded: int
    theoretical: list
    in_range: list
    theoretical_raw: list
    meta: dict = field(default_factory=dict)

    @property
    def valid(self) -> int:
        return self.trials - self.excluded

    def _wilson(self, counts) -> tuple[list, list]:
        if self.valid == 0:
            return [0.0] * len(counts), [1.0] * len(counts)
        lo, hi = proportion_confint(np.asarray(counts), self.valid, alpha=0.05, method="wilson")
        return [float(v) for v in np.atleast_1d(lo)], [float(v) for v in np.atleast_1d(hi)]

    @property
    def empirical(self) -> list:
        return [c / self.valid if self.valid else 0.0 for c in self.exceed]

    @property
    def conservative(self) -> list:
        return [(c + u) / self.valid if self.valid else 0.0 for c, u in zip(self.exceed, self.undecided)]

    @property
    def wilson(self) -> tuple[list, list]:
        return self._wilson(self.exceed)

    @property
    def conservative_wilson_lo(self) -> list:
        return self._wilson([c + u for c, u in zip(self.exceed, self.undecided)])[0]

    @property
    def powered(self) -> bool:
        return self.valid >= POWERED_TRIALS

    def checks(self) -> list:
        """Per t: None (not asserted), True (pass) or False (fail).

        Asserted only for in-range t with at least POWERED_TRIALS valid
        trials: the Wilson lower end of (exceed + undecided) must not exceed
        the theoretical bound.
        """
        if not self.powered:
            return [None] * len(self.t_values)
        lo = self.conservative_wilson_lo
        return [
            (bool(lo[k] <= self.theoretical[k] + 1e-12) if self.in_range[k] else None)
            for k in range(len(self.t_values))
        ]

    @property
    def passed(self) -> bool:
        return all(c is not False for c in self.checks())

    def rows(self) -> list[dict]:
        wl, wh = self.wilson
        cl = self.conservative_wilson_lo
        ch = self.checks()
        return [
            {
                "t": self.t_values[k],
                "empirical": self.empirical[k],
                "wilson_lo": wl[k],
                "wilson_hi": wh[k],
                "theoretical": self.theoretical[k],
                "undecided": self.undecided[k],
                "exceed": self.exceed[k],
                "conservative": self.conservative[k],
                "conservative_wilson_lo": cl[k],
                "theoretical_raw": self.theoretical_raw[k],
                "in_range": self.in_range[k],
                "check": ch[k],
            }
            for k in range(len(self.t_values))
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        cols = list(rows[0]) if rows else ["t"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "trials": self.trials,
            "excluded": self.excluded,
            "powered": self.powered,
            "passed": self.passed,
            "rows": [
                {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in r.items()}
                for r in self.rows()
            ],
            **self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def default_workers() -> int:
    env = os.environ.get("REACHBOUND_WORKERS")
    if env:
        try:
            k = int(env)
        except ValueError:
            raise ConfigError("REACHBOUND_WORKERS", f"not an integer: {env!r}") from None
        if k < 1:
            raise ConfigError("REACHBOUND_WORKERS", "must be >= 1")
        return k
    return os.cpu_count() or 1


def mc_tail_experiment(
    spec: RandomModelSpec,
    geometry: Geometry,
    statistic: str,
    t_grid: Sequence[float],
    trials: int,
    seed: int,
    workers: int = 1,
    options: TrialOptions | None = None,
    allow_small: bool = False,
) -> TailCurve:
    """Empirical P(statistic >= t) for each t, with Wilson intervals and the theoretical curve."""
    if statistic not in STATISTICS:
        raise ConfigError("statistic", f"expected one of {STATISTICS}")
    if trials < MIN_TRIALS and not allow_small:
        raise ConfigError("trials", f"need at least {MIN_TRIALS} trials")
    if trials < 1:
        raise ConfigError("trials", "must be positive")
    ts = tuple(sorted(float(t) for t in t_grid))
    if not ts:
        raise ConfigError("t_grid", "must not be empty")
    theo = theoretical_curve(spec, geometry, statistic, ts)
    used = [_used_bound(tb) for tb in theo]
    opt = options or TrialOptions()
    if not opt.informative:
        informative = tuple(t for t, u, tb in zip(ts, used, theo) if tb.in_range and u < 1.0)
        opt = TrialOptions(opt.target_rel_err, opt.cell_budget, opt.federer_samples, informative)
    tasks = [(spec, geometry, statistic, ts, int(seed), k, opt) for k in range(trials)]
    if workers <= 1:
        results = [run_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_trial, tasks, chunksize=max(1, trials // (8 * workers))))
    exceed = [0] * len(ts)
    undecided = [0] * len(ts)
    excluded = 0
    for r in results:
        if r is None:
            excluded += 1
            continue
        for k in range(len(ts)):
            exceed[k] += r[0][k]
            undecided[k] += r[1][k]
    return TailCurve(
        statistic=statistic,
        t_values=list(ts),
        exceed=exceed,
        undecided=undecided,
        trials=trials,
        excluded=excluded,
        theoretical=used,
        in_range=[tb.in_range for tb in theo],
        theoretical_raw=[tb.raw for tb in theo],
        meta={
            "model": spec.to_dict(),
            "geometry": geometry.to_dict(),
            "seed": int(seed),
            "options": {
                "target_rel_err": opt.target_rel_err,
                "cell_budget": opt.cell_budget,
                "federer_samples": opt.federer_samples,
            },
        },
    )
