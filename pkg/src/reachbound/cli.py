"""Command-line interface: ``reachbound {bound,estimate,mc-tail,worstcase}``.

Exit codes: 0 success, 2 mathematical failure (not a zero, singular
Jacobian, empty sample, ...), 3 bad input (syntax, config), 4 a Monte
Carlo soundness check failed. Errors are also written to stderr as JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import jsonschema
import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DegreeOverflowError,
    PolySyntaxError,
    ReachBoundError,
)
from .experiment import POWERED_TRIALS, Geometry, TrialOptions, default_workers, mc_tail_experiment
from .federer import estimate_local_reach, estimate_reach, sample_variety
from .parse import parse_poly_text
from .poly import PolyTuple, from_json, to_dict
from .random_models import RandomModelSpec
from .reach import reach_bounds, worstcase_bit_bound
from .schema import validator

EXIT_OK, EXIT_MATH, EXIT_INPUT, EXIT_ASSERT = 0, 2, 3, 4
FORMATS = ("json", "csv", "table")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are input errors
        raise CliError(EXIT_INPUT, "UsageError", message)


# -- serialisation helpers -------------------------------------------------


def clean(obj):
    """JSON-safe copy: non-finite floats become "inf"/"-inf"/"nan", tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def envelope(command: str, config: dict, seed, result: dict) -> dict:
    return clean(
        {
            "tool": "reachbound",
            "version": __version__,
            "command": command,
            "config": config,
            "seed": seed,
            "result": result,
        }
    )


def _dump(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[("" if r[c] is None else (f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]))) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[k]) for row in cells)) for k, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# -- input helpers ---------------------------------------------------------


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_INPUT, "ConfigError", f"{what}: expected comma-separated integers", field=what) from None


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_INPUT, "ConfigError", f"{what}: expected comma-separated numbers", field=what) from None


def load_poly(args) -> tuple[PolyTuple, dict]:
    degrees = _ints(args.degrees, "degrees") if args.degrees else None
    if args.poly is not None:
        f = parse_poly_text(args.poly, n=args.n, degrees=degrees)
        src = {"poly": args.poly}
    elif args.poly_file is not None:
        path = Path(args.poly_file)
        try:
            text = path.read_text()
        except OSError as exc:
            raise CliError(EXIT_INPUT, "ConfigError", str(exc), field="poly_file") from None
        if path.suffix == ".json":
            try:
                f = from_json(text)
            except (ValueError, KeyError, TypeError) as exc:
                raise CliError(EXIT_INPUT, "ConfigError", f"bad polynomial JSON: {exc}", field="poly_file") from None
        else:
            f = parse_poly_text(text.strip(), n=args.n, degrees=degrees)
        src = {"poly_file": str(path)}
    else:
        raise CliError(EXIT_INPUT, "ConfigError", "one of --poly or --poly-file is required", field="poly")
    src["resolved"] = to_dict(f)
    return f, src


def _resolve_seed(args, configured=None) -> int:
    if args.seed is not None:
        return int(args.seed)
    if configured is not None:
        return int(configured)
    if args.auto_seed:
        return secrets.randbits(31)
    raise CliError(
        EXIT_INPUT, "ConfigError", "randomized command: pass --seed S or --auto-seed", field="seed"
    )


def _workers(args, configured=None) -> int:
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise CliError(EXIT_INPUT, "ConfigError", "--workers must be >= 1", field="workers")
        return args.workers
    if configured is not None:
        return int(configured)
    return default_workers()


# -- commands ----------------------------------------------------------------


def cmd_bound(args) -> int:
    f, src = load_poly(args)
    if args.point is None and not args.global_:
        raise CliError(EXIT_INPUT, "ConfigError", "pass --point, --global, or both", field="point")
    point = _floats(args.point, "point") if args.point is not None else None
    if point is not None and len(point) != f.n:
        raise CliError(EXIT_INPUT, "ConfigError", f"--point needs {f.n} coordinates", field="point")
    R = args.R if args.global_ else None
    if R is not None and R < 1:
        raise CliError(EXIT_INPUT, "ConfigError", "--R must be >= 1", field="R")
    rep = reach_bounds(
        f,
        point=point,
        R=R,
        r_max=args.r_max,
        seed=args.seed or 0,
        target_rel_err=args.target_rel_err,
        cell_budget=args.cell_budget,
    )
    result = rep.to_dict()
    result["routes"] = [{"route": k, "bound": v} for k, v in rep.routes()]
    config = {
        **src,
        "point": point,
        "global": bool(args.global_),
        "R": R,
        "r_max": args.r_max,
        "target_rel_err": args.target_rel_err,
        "cell_budget": args.cell_budget,
    }
    report = envelope("bound", config, args.seed or 0, result)
    rows = [{"route": r["route"], "bound": r["bound"]} for r in report["result"]["routes"]]
    _write(args, report, rows)
    return EXIT_OK


def cmd_estimate(args) -> int:
    f, src = load_poly(args)
    seed = _resolve_seed(args)
    S = sample_variety(f, args.R, args.samples, seed=seed, max_probes=args.max_probes)
    if args.sample_csv:
        Path(args.sample_csv).write_text(S.to_csv())
    if args.local_point is not None:
        zeta = _floats(args.local_point, "local_point")
        est = estimate_local_reach(S, zeta, args.radius, min_sep=args.min_sep)
    else:
        est = estimate_reach(S, min_sep=args.min_sep)
    result = est.to_dict()
    result.update(
        points=len(S),
        probes=S.probes,
        starts=S.starts,
        rejects=S.rejects,
        max_residual=float(S.residuals.max()),
    )
    config = {
        **src,
        "R": args.R,
        "samples": args.samples,
        "min_sep": args.min_sep if args.min_sep is not None else 1e-3 * args.R,
        "max_probes": args.max_probes,
        "local_point": args.local_point,
        "radius": args.radius if args.local_point is not None else None,
    }
    report = envelope("estimate", config, seed, result)
    _write(args, report, [{"key": k, "value": v} for k, v in report["result"].items()])
    return EXIT_OK


def _bundled(name: str) -> Path | None:
    cand = resources.files("reachbound").joinpath("configs", name)
    if cand.is_file():
        return Path(str(cand))
    if not name.endswith(".toml"):
        return _bundled(name + ".toml")
    return None


def load_config(path_or_name: str) -> dict:
    path = Path(path_or_name)
    if not path.is_file():
        b = _bundled(path_or_name)
        if b is None:
            raise CliError(EXIT_INPUT, "ConfigError", f"no such config: {path_or_name}", field="config")
        path = b
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise CliError(EXIT_INPUT, "ConfigError", f"cannot parse {path}: {exc}", field="config") from None
    data.setdefault("name", path.stem)
    return data


def _check_config(cfg: dict) -> None:
    errors = sorted(validator("mc_config").iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise CliError(EXIT_INPUT, "ConfigError", f"{where}: {e.message}", field=where)


def _spec_from(cfg: dict) -> RandomModelSpec:
    m = dict(cfg["model"])
    if "weights" in m:
        try:
            m["weights"] = {int(k): float(v) for k, v in m["weights"].items()}
        except ValueError:
            raise ConfigError("model.weights", "keys must be integers") from None
    if "supports" in m:
        m["supports"] = tuple(tuple(tuple(e) for e in M) for M in m["supports"])
    return RandomModelSpec(**m)


def cmd_mc_tail(args) -> int:
    cfg = load_config(args.config)
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.statistic is not None:
        cfg["statistic"] = args.statistic
    if args.t_grid is not None:
        cfg["t_grid"] = _floats(args.t_grid, "t_grid")
    cfg.setdefault("statistic", "log_inv_reach_R")
    cfg.setdefault("trials", 1000)
    _check_config(cfg)
    seed = _resolve_seed(args, cfg.get("seed"))
    workers = _workers(args, cfg.get("workers"))
    cfg["seed"] = seed
    spec = _spec_from(cfg)
    g = cfg["geometry"]
    geo = Geometry(
        g["n"], g["q"], tuple(g["degrees"]), float(g.get("R", 1.0)), tuple(g["x"]) if "x" in g else None
    )
    o = cfg.get("options", {})
    opt = TrialOptions(
        target_rel_err=o.get("target_rel_err", 0.25),
        cell_budget=o.get("cell_budget", 2 * 10**6),
        federer_samples=o.get("federer_samples", 200),
    )
    curve = mc_tail_experiment(
        spec, geo, cfg["statistic"], cfg["t_grid"], cfg["trials"], seed, workers, opt, allow_small=True
    )
    result = curve.to_dict()
    config = {**cfg, "workers": workers}
    report = envelope("mc-tail", config, seed, result)
    name = cfg.get("name", "mc_tail")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.csv").write_text(curve.to_csv())
        (out / f"{name}.json").write_text(_dump(report))
    rows = []
    for r in curve.rows():
        c = r["check"]
        rows.append(
            {
                "t": r["t"],
                "exceed": r["exceed"],
                "undecided": r["undecided"],
                "empirical": r["empirical"],
                "wilson_lo": r["wilson_lo"],
                "wilson_hi": r["wilson_hi"],
                "theoretical": r["theoretical"],
                "check": "skip" if c is None else ("PASS" if c else "FAIL"),
            }
        )
    if args.format == "table":
        text = _table(rows)
        if curve.powered:
            text += f"soundness: {'PASS' if curve.passed else 'FAIL'} ({curve.valid} valid trials, {curve.excluded} excluded)\n"
        else:
            text += f"soundness: assertions skipped ({curve.valid} valid trials < {POWERED_TRIALS})\n"
        _emit(text, args.output)
    else:
        _write(args, report, rows)
    if not curve.passed:
        failed = [t for t, c in zip(curve.t_values, curve.checks()) if c is False]
        msg = f"empirical tail above the theoretical bound at t = {failed}"
        sys.stderr.write(json.dumps(clean({"error": "SoundnessCheckFailed", "message": msg, "exit_code": EXIT_ASSERT})) + "\n")
        return EXIT_ASSERT
    return EXIT_OK


def cmd_worstcase(args) -> int:
    try:
        val = worstcase_bit_bound(args.n, args.q, args.D, args.tau, args.R)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, "ConfigError", str(exc)) from None
    v = float(val) if isinstance(val, float) else str(val)
    if isinstance(v, float) and v.is_integer() and abs(v) < 2**53:
        v = int(v)
    config = {"n": args.n, "q": args.q, "D": args.D, "tau": args.tau, "R": args.R}
    report = envelope("worstcase", config, None, {"log2_inv_reach_bound": v})
    _write(args, report, [{"log2_inv_reach_bound": v}])
    return EXIT_OK


def _write(args, report: dict, rows: list[dict]) -> None:
    if args.format == "json":
        _emit(_dump(report), args.output)
    elif args.format == "csv":
        _emit(_csv(rows), args.output)
    else:
        _emit(_table(rows), args.output)


# -- parser ------------------------------------------------------------------


def _poly_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--poly", help='polynomial text, e.g. "x0^2 + x1^2 - 1"; tuples separated by ";"')
    p.add_argument("--poly-file", help="file with polynomial text, or a .json polynomial")
    p.add_argument("--n", type=int, help="ambient dimension (default: inferred)")
    p.add_argument("--degrees", help="comma-separated degree vector (default: total degrees)")


def _out_args(p: argparse.ArgumentParser, default: str = "json") -> None:
    p.add_argument("--format", choices=FORMATS, default=default)
    p.add_argument("--output", "-o", help="write to this file instead of stdout")


def _seed_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--auto-seed", action="store_true", help="draw a seed and record it in the report")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="reachbound", description="Certified lower bounds and estimates for the reach of Z(f).")
    ap.add_argument("--version", action="version", version=f"reachbound {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bound", help="certified reach lower bounds at a point and/or over a cube")
    _poly_args(b)
    b.add_argument("--point", help="comma-separated zero of f")
    b.add_argument("--global", dest="global_", action="store_true", help="bound reach_R over [-R, R]^n")
    b.add_argument("--R", type=float, default=1.0)
    b.add_argument("--r-max", type=float, default=1e6)
    b.add_argument("--target-rel-err", type=float, default=0.05)
    b.add_argument("--cell-budget", type=int, default=10**7)
    b.add_argument("--seed", type=int, default=None, help="seed of the tensor power iteration (default 0)")
    _out_args(b)
    b.set_defaults(func=cmd_bound)

    e = sub.add_parser("estimate", help="empirical Federer reach estimate from samples")
    _poly_args(e)
    e.add_argument("--samples", type=int, default=500)
    e.add_argument("--R", type=float, default=2.0)
    e.add_argument("--min-sep", type=float, default=None)
    e.add_argument("--max-probes", type=int, default=None)
    e.add_argument("--local-point", help="estimate the local reach around this point instead")
    e.add_argument("--radius", type=float, default=1.0)
    e.add_argument("--sample-csv", help="also write the sample as CSV")
    _seed_args(e)
    _out_args(e)
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("mc-tail", help="Monte Carlo tail experiment against the closed-form bounds")
    m.add_argument("--config", required=True, help="TOML/JSON config file or bundled config name")
    m.add_argument("--trials", type=int)
    m.add_argument("--statistic", choices=("cond_R", "cond_local", "log_inv_reach_R"))
    m.add_argument("--t-grid", help="comma-separated thresholds")
    m.add_argument("--workers", type=int)
    m.add_argument("--out-dir", help="directory for <name>.csv and <name>.json")
    _seed_args(m)
    _out_args(m, default="table")
    m.set_defaults(func=cmd_mc_tail)

    w = sub.add_parser("worstcase", help="worst-case bound on log2(1/reach_R) for integer tuples")
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--q", type=int, required=True)
    w.add_argument("--D", type=int, required=True)
    w.add_argument("--tau", type=int, required=True)
    w.add_argument("--R", type=int, default=1)
    _out_args(w)
    w.set_defaults(func=cmd_worstcase)
    return ap


def _error_payload(exc: BaseException) -> tuple[int, dict]:
    if isinstance(exc, CliError):
        return exc.code, {"error": exc.kind, "message": str(exc), **exc.extra}
    if isinstance(exc, PolySyntaxError):
        return EXIT_INPUT, {"error": "PolySyntaxError", "message": str(exc), "position": exc.position}
    if isinstance(exc, DegreeOverflowError):
        return EXIT_INPUT, {"error": "DegreeOverflowError", "message": str(exc)}
    if isinstance(exc, ConfigError):
        return EXIT_INPUT, {"error": "ConfigError", "message": str(exc), "field": exc.field}
    if isinstance(exc, jsonschema.ValidationError):
        return EXIT_INPUT, {"error": "ConfigError", "message": exc.message}
    if isinstance(exc, ReachBoundError):
        return EXIT_MATH, {"error": type(exc).__name__, "message": str(exc)}
    return EXIT_INPUT, {"error": type(exc).__name__, "message": str(exc)}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (CliError, ReachBoundError, ValueError, jsonschema.ValidationError) as exc:
        code, payload = _error_payload(exc)
        payload = {k: v for k, v in payload.items() if v is not None}
        payload["exit_code"] = code
        sys.stderr.write(json.dumps(clean(payload)) + "\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
