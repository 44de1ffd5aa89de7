"""Command-line front end.

    boolvol params    --pseq power:1,0.6667 --r 2 --n 500
    boolvol simulate  --spec parity --n 50 --p 0.3 --replicas 10000 --seed 1
    boolvol influence --spec threshold --n 4 --T 2 --p 0.5
    boolvol sweep     --pseq power:1,0.6667 --r 2 --n 1000 1000000 --replicas 10000 --seed 7
    boolvol verify

Every subcommand also reads ``--config file.json``; keys are the long flag
names with dashes replaced by underscores, and flags given on the command line
win over the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__, exact
from .boolfn import (
    Counterexample, Dictator, EvalState, Majority, Parity, Threshold, Tribes, evaluate, spec_to_dict,
)
from .dynamics import RngStream, run_trajectory, sample_stationary
from .params import (
    parse_pseq, rounded_plan, sequence_points, subsequence, threshold_plan, validate_assumptions, check_lemma_conditions,
)
from .stats import DEFAULT_EPS, DEFAULT_K_GRID, SUMMARY_COLUMNS, counterexample_sweep, mc_campaign

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 2, 3

# never embedded in artifacts, so outputs do not depend on them
_RUNTIME_KEYS = {"threads", "out", "config", "trajectory", "command"}

_DEFAULTS = {
    "r": 2,
    "replicas": 10_000,
    "format": "json",
    "threads": None,
    "k_grid": list(DEFAULT_K_GRID),
    "eps": DEFAULT_EPS,
    "max_count": 8,
}


class ConfigError(ValueError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boolvol", description="Change counts of Boolean functions under the p-biased walk.")
    parser.add_argument("--version", action="version", version=f"boolvol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default values for the flags")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--threads", type=int, help="worker processes (env VOLATILITY_THREADS)")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicas", type=int)

    def function_flags(p):
        p.add_argument("--spec", choices=("dictator", "parity", "majority", "tribes", "threshold", "counterexample"))
        p.add_argument("--n", type=int)
        p.add_argument("--p", type=float)
        p.add_argument("--ell", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--r", type=int)
        p.add_argument("--H", type=float)
        p.add_argument("--T", type=int)
        p.add_argument("--pseq", help="derive ell, k, H and p from a sequence plan at --n")

    p = sub.add_parser("params", help="tribe and threshold plans", argument_default=argparse.SUPPRESS)
    common(p)
    p.add_argument("--pseq")
    p.add_argument("--r", type=int)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--n-range", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--max-count", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo law of the change count", argument_default=argparse.SUPPRESS)
    common(p)
    function_flags(p)
    p.add_argument("--k-grid", type=int, nargs="+")
    p.add_argument("--trajectory", help="also dump replica 0 as CSV time,bit,new_value,f_value")

    p = sub.add_parser("influence", help="exact total influence", argument_default=argparse.SUPPRESS)
    common(p)
    function_flags(p)

    p = sub.add_parser("sweep", help="counterexample sweep", argument_default=argparse.SUPPRESS)
    common(p)
    p.add_argument("--pseq")
    p.add_argument("--r", type=int)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--n-range", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--max-count", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--k-grid", type=int, nargs="+")

    p = sub.add_parser("verify", help="run the oracle suite", argument_default=argparse.SUPPRESS)
    common(p)
    return parser


def _merge_config(ns: argparse.Namespace) -> dict:
    given = vars(ns)
    cfg = dict(_DEFAULTS)
    if given.get("config"):
        try:
            loaded = json.loads(Path(given["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {given['config']}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    cfg.update(given)
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _embedded(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in _RUNTIME_KEYS and v is not None}


def _clean(obj):
    # JSON has no NaN/inf
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def _csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _json_text(cfg: dict, result) -> str:
    doc = {"tool": "boolvol", "version": __version__, "command": cfg["command"], "config": _embedded(cfg), "result": result}
    return json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n"


def _emit(cfg: dict, text: str, out=None, suffix: str = ""):
    out = out or cfg.get("out")
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if suffix:
        path = path.with_name(path.stem + suffix + path.suffix)
    path.write_text(text)


def _plans(cfg):
    _require(cfg, "pseq")
    pseq = parse_pseq(cfg["pseq"])
    r = int(cfg["r"])
    if cfg.get("n") is not None:
        ns = cfg["n"] if isinstance(cfg["n"], list) else [cfg["n"]]
        return pseq, r, sequence_points(pseq, [int(n) for n in ns], r)
    if cfg.get("n_range") is not None:
        lo, hi = cfg["n_range"]
        return pseq, r, subsequence(pseq, r, int(lo), int(hi), int(cfg["max_count"]))
    raise ConfigError("give --n or --n-range")


def cmd_params(cfg) -> int:
    pseq, r, plans = _plans(cfg)
    assumptions = validate_assumptions(pseq, r)
    rows = []
    for plan in plans:
        row = plan.to_dict()
        try:
            tp = threshold_plan(plan.n_hat, plan.p_hat)
            row.update(a=tp.a, H=tp.H, T=tp.T)
        except ValueError:
            row.update(a=None, H=None, T=None)
        cond = check_lemma_conditions(plan)
        row.update(cond_i=cond.cond_i, cond_iii=cond.cond_iii, cond_iii_value=cond.cond_iii_value)
        rows.append(row)
    if cfg["format"] == "csv":
        cols = ["r", "n_raw", "ell_real", "k_real", "ell_hat", "k_hat", "n_hat", "p_hat", "a", "H", "T",
                "cond_i", "cond_iii", "cond_iii_value"]
        _emit(cfg, _csv_text(rows, cols))
    else:
        _emit(cfg, _json_text(cfg, {"plans": rows, "assumptions": assumptions.to_dict()}))
    return EXIT_OK


def _function(cfg):
    """Spec and bias from the function flags, optionally via a sequence plan."""
    _require(cfg, "spec")
    kind = cfg["spec"]
    if cfg.get("pseq") is not None:
        _require(cfg, "n")
        plan = rounded_plan(int(cfg["n"]), parse_pseq(cfg["pseq"]), int(cfg["r"]))
        p = plan.p_hat if cfg.get("p") is None else cfg["p"]
        if kind == "tribes":
            return Tribes(plan.ell_hat, plan.k_hat, plan.r), p
        H = threshold_plan(plan.n_hat, p).H
        if kind == "threshold":
            return Threshold(plan.n_hat, H), p
        if kind == "counterexample":
            return Counterexample(plan.ell_hat, plan.k_hat, plan.r, H), p
        raise ConfigError("--pseq only applies to tribes, threshold and counterexample")
    _require(cfg, "p")
    p = float(cfg["p"])
    if kind in ("tribes", "counterexample"):
        _require(cfg, "ell", "k")
        ell, k, r = int(cfg["ell"]), int(cfg["k"]), int(cfg["r"])
        if kind == "tribes":
            return Tribes(ell, k, r), p
        if cfg.get("H") is None:
            _require(cfg, "T")
        H = float(cfg["H"]) if cfg.get("H") is not None else float(cfg["T"])
        return Counterexample(ell, k, r, H), p
    _require(cfg, "n")
    n = int(cfg["n"])
    if kind == "dictator":
        return Dictator(n), p
    if kind == "parity":
        return Parity(n), p
    if kind == "majority":
        return Majority(n), p
    if cfg.get("H") is None and cfg.get("T") is None:
        H = threshold_plan(n, p).H
    else:
        H = float(cfg["H"]) if cfg.get("H") is not None else float(cfg["T"])
    return Threshold(n, H), p


def _dump_trajectory(spec, p, seed, path):
    rng = RngStream(seed, 0)
    x = sample_stationary(spec.n, p, rng)
    es = EvalState(spec, x)
    rows = [{"time": 0.0, "bit": None, "new_value": None, "f_value": es.value}]

    def observer(ev):
        rows.append({"time": ev.time, "bit": ev.bit, "new_value": ev.new_value, "f_value": es.observe(ev.bit, ev.new_value)})

    run_trajectory(x, p, 1.0, rng, observer)
    Path(path).write_text(_csv_text(rows, ("time", "bit", "new_value", "f_value")))


def cmd_simulate(cfg) -> int:
    _require(cfg, "seed")
    spec, p = _function(cfg)
    rep = mc_campaign(spec, p, int(cfg["replicas"]), int(cfg["seed"]), cfg["threads"], tuple(cfg["k_grid"]))
    if cfg.get("trajectory"):
        _dump_trajectory(spec, p, int(cfg["seed"]), cfg["trajectory"])
    if cfg["format"] == "csv":
        row = {"variant": type(spec).__name__.lower(), "n": spec.n, "p": p, "replicas": rep.replicas,
               "seed": rep.seed, "mean": rep.mean, "se": rep.se, "p_zero": rep.p_zero,
               "p_zero_lo": rep.p_zero_ci[0], "p_zero_hi": rep.p_zero_ci[1]}
        cols = list(row)
        for k in rep.k_grid:
            row[f"tail_k{k}"] = rep.tail[k]
            cols.append(f"tail_k{k}")
        _emit(cfg, _csv_text([row], cols))
    else:
        _emit(cfg, _json_text(cfg, rep.to_dict()))
    return EXIT_OK


def cmd_influence(cfg) -> int:
    spec, p = _function(cfg)
    result = {"spec": spec_to_dict(spec), "p": p}
    if isinstance(spec, Threshold):
        T = math.ceil(spec.H)
        result.update(method="closed_form", T=T, total_influence=exact.threshold_expected_changes_exact(spec.n, p, T))
        if spec.n * p > 1:
            result["asymptotic"] = exact.threshold_expected_changes_asymptotic(spec.n, p)
    else:
        if spec.n > exact.BRUTE_FORCE_MAX_N:
            raise ConfigError(f"brute-force influence needs n <= {exact.BRUTE_FORCE_MAX_N}, got n = {spec.n}")
        prof = exact.influence_bruteforce(spec, p)
        result.update(method="brute_force", total_influence=prof.total, per_bit=list(prof.per_bit))
    if isinstance(spec, Tribes):
        result["p_g0_exact"] = exact.prob_g_zero_exact(spec.ell, spec.k, p, spec.r)
    if cfg["format"] == "csv":
        cols = ("variant", "n", "p", "method", "total_influence")
        row = {"variant": result["spec"]["variant"], "n": spec.n, "p": p, "method": result["method"],
               "total_influence": result["total_influence"]}
        _emit(cfg, _csv_text([row], cols))
    else:
        _emit(cfg, _json_text(cfg, result))
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    _require(cfg, "seed")
    pseq, r, plans = _plans(cfg)
    report = counterexample_sweep(
        pseq, r, plans, int(cfg["replicas"]), int(cfg["seed"]),
        draws=cfg.get("draws"), threads=cfg["threads"], k_grid=tuple(cfg["k_grid"]), eps=float(cfg["eps"]),
    )
    if cfg["format"] == "csv":
        _emit(cfg, _csv_text(report.summary_rows(), SUMMARY_COLUMNS))
        if cfg.get("out"):
            _emit(cfg, _csv_text(report.tail_rows(), ("n_hat", "k", "tail_f", "tail_f_hi", "tail_h")), suffix=".tails")
    else:
        _emit(cfg, _json_text(cfg, report.to_dict()))
    return EXIT_OK


def cmd_verify(cfg) -> int:
    from .verify import run_checks

    results = run_checks()
    if cfg["format"] == "json" and cfg.get("out"):
        _emit(cfg, _json_text(cfg, [r._asdict() for r in results]))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "params": cmd_params,
    "simulate": cmd_simulate,
    "influence": cmd_influence,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def run(cfg: dict) -> int:
    try:
        return COMMANDS[cfg["command"]](cfg)
    except (ValueError, TypeError) as exc:
        print(f"boolvol: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _merge_config(ns)
    except ConfigError as exc:
        print(f"boolvol: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
