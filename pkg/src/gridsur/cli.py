"""Command-line front end.

    gridsur run <config.json>      seeded replications; trace CSVs,
                                   summary JSON, manifest JSON
    gridsur check <config.json>    randomized verification suites
    gridsur compare <config.json>  several functionals on shared truths

Exit codes: 0 success, 1 check-suite failure, 2 invalid configuration,
3 numerical failure, 4 I/O failure.  Outputs are byte-deterministic
functions of the (overridden) config document.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_all_suites
from .config import ExperimentConfig, canonical_document, load_config
from .errors import ConfigError, NumericalError, ParameterError, StateError
from .functionals import FunctionalSpec
from .normals import gauss_hermite_rule
from .reports import summarize_traces, write_compare_csv, write_json, write_trace_csv
from .strategy import METRIC_NAMES, check_supermartingale, convergence_report, run_sur

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _read_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    target = override or cfg.output_dir
    if target is None:
        raise ConfigError("no output directory: set config output_dir or pass --out")
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(cfg: ExperimentConfig) -> dict:
    return {
        "config": canonical_document(cfg.document),
        "config_hash": cfg.config_hash,
        "replication_seeds": [cfg.replication_seed(r) for r in range(cfg.replications)],
        "version": __version__,
    }


def _run_traces(cfg: ExperimentConfig, spec: FunctionalSpec) -> list:
    return [
        run_sur(cfg.domain, cfg.kernel, cfg.strategy_for(spec, cfg.replication_seed(r)))
        for r in range(cfg.replications)
    ]


def cmd_run(args) -> int:
    cfg = load_config(
        _read_config(args.config),
        override_replications=args.replications,
        override_seed=args.seed,
    )
    out = _out_dir(cfg, args.out)
    spec = cfg.functionals[0]
    traces = _run_traces(cfg, spec)

    for r, trace in enumerate(traces):
        write_trace_csv(trace, out / f"trace_rep{r:03d}.csv")

    summary = summarize_traces(traces)
    summary["config_hash"] = cfg.config_hash

    violations = 0
    worst_rise = -np.inf
    for trace in traces:
        rep = convergence_report(trace.measures)
        violations += rep.variance_violations
        worst_rise = max(worst_rise, rep.max_variance_increase)
    summary["variance_monotonicity"] = {
        "violations": violations,
        "max_increase": float(worst_rise),
    }

    rule = gauss_hermite_rule(cfg.strategy.quadrature_nodes)
    sm = check_supermartingale(
        traces[0].measures[0],
        cfg.domain,
        spec,
        range(cfg.domain.size),
        rule,
        seed=cfg.replication_seed(0),
        method="fast",
    )
    summary["supermartingale"] = {
        "passed": sm.passed,
        "worst_margin": sm.worst_margin,
    }

    write_json(out / "summary.json", summary)
    write_json(out / "manifest.json", _manifest(cfg))
    print(f"wrote {cfg.replications} trace(s), summary.json, manifest.json to {out}")
    print(
        f"H median: {summary['h0_median']:.6g} -> {summary['h_final_median']:.6g}; "
        f"variance violations: {violations}"
    )
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = load_config(_read_config(args.config), override_seed=args.seed)
    seed = cfg.document.get("seed", 0)
    reports = run_all_suites(seed=seed, corrupt=args.corrupt_functional)
    for rep in reports:
        print(rep.line())
    all_passed = all(r.passed for r in reports)
    if args.out is not None:
        out = _out_dir(cfg, args.out)
        write_json(
            out / "check_report.json",
            {
                "config_hash": cfg.config_hash,
                "passed": all_passed,
                "suites": [
                    {
                        "name": r.name,
                        "passed": r.passed,
                        "n_instances": r.n_instances,
                        "worst_margin": r.worst_margin,
                    }
                    for r in reports
                ],
            },
        )
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def cmd_compare(args) -> int:
    cfg = load_config(
        _read_config(args.config),
        multi=True,
        override_replications=args.replications,
        override_seed=args.seed,
    )
    out = _out_dir(cfg, args.out)
    rows = []
    max_metrics = max(len(METRIC_NAMES[spec.kind]) for spec in cfg.functionals)
    for spec in cfg.functionals:
        traces = _run_traces(cfg, spec)
        for r, trace in enumerate(traces):
            for record in trace.records:
                rows.append(
                    {
                        "functional": spec.kind,
                        "replication": r,
                        "step": record.step,
                        "h": record.h,
                        "metrics": [record.metrics[m] for m in trace.metric_names],
                    }
                )
    write_compare_csv(out / "compare.csv", rows, max_metrics)
    write_json(out / "manifest.json", _manifest(cfg))
    print(f"wrote compare.csv ({len(rows)} rows) and manifest.json to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsur",
        description="Sequential design on finite grids by stepwise uncertainty reduction.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = dict(help="experiment config JSON")
    p_run = sub.add_parser("run", help="execute seeded replications and write traces")
    p_run.add_argument("config", **common)
    p_check = sub.add_parser("check", help="run the verification suites")
    p_check.add_argument("config", **common)
    p_check.add_argument(
        "--corrupt-functional",
        action="store_true",
        help="debug: negate the functional so the checker must fail",
    )
    p_cmp = sub.add_parser("compare", help="run several functionals on shared truths")
    p_cmp.add_argument("config", **common)

    for p in (p_run, p_check, p_cmp):
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--replications", type=int, default=None, help="override replications")
        p.add_argument("--seed", type=int, default=None, help="override base seed")

    p_run.set_defaults(func=cmd_run)
    p_check.set_defaults(func=cmd_check)
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, StateError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
