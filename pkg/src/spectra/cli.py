"""Command-line entry point: ``spectra gen|analyze|radius|experiment|report``.

Exit codes: 0 success, 1 failed ``--check``, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import mmio
from .digraph import structure_report
from .ensemble import EnsembleParams, parse_weight_spec, sample_matrix
from .experiments import ExperimentConfig, iter_experiment, summarize
from .records import config_errors, dumps_record, loads_records, manifest, now_iso
from .spectral import estimate_radius

THREADS_ENV = "SPECTRA_THREADS"

CSV_FIELDS = ("d", "trials", "acyclic_frac", "wilson_lo", "wilson_hi", "formula",
              "complex_frac", "q01", "q50", "q99")


class UsageError(Exception):
    pass


def _log_or_str(x):
    if x is None:
        return None
    return "-inf" if x == -math.inf else x


def _exp(x):
    if x is None:
        return None
    return 0.0 if x == -math.inf else math.exp(x)


def _parse_ks(text: str) -> list[int]:
    try:
        ks = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise UsageError(f"--k expects comma-separated integers, got {text!r}") from None
    if not ks or min(ks) < 1:
        raise UsageError("--k needs positive powers")
    return ks


def _read_matrix(path):
    try:
        return mmio.read(path)[0]
    except mmio.MatrixMarketError as exc:
        raise UsageError(f"{path}: {exc}") from None
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def cmd_gen(args) -> int:
    if (args.d is None) == (args.p is None):
        raise UsageError("give exactly one of --d or --p")
    try:
        weights = parse_weight_spec(args.weights)
        if args.d is not None:
            params = EnsembleParams.from_degree(args.n, args.d, weights=weights,
                                                allow_self_loops=args.self_loops, master_seed=args.seed)
        else:
            params = EnsembleParams(args.n, args.p, weights, args.self_loops, args.seed)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    a = sample_matrix(params, args.seed)
    info = manifest(
        {"n": params.n, "edge_prob": params.edge_prob, "weights": weights.describe(),
         "seed": args.seed, "allow_self_loops": params.allow_self_loops},
        timestamps=False,
    )
    text = mmio.dumps(a, info)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise UsageError(f"{args.out}: {exc.strerror}") from None
    return 0


def cmd_analyze(args) -> int:
    a = _read_matrix(args.matrix)
    print(json.dumps(structure_report(a).to_dict()))
    return 0


def cmd_radius(args) -> int:
    a = _read_matrix(args.matrix)
    ks = _parse_ks(args.k)
    report = structure_report(a)
    if args.kostin:
        if a.n <= 2:
            raise UsageError("Kostin bound requires n > 2")
        if report.acyclic:
            raise UsageError("Kostin bound needs ||A^n|| != 0, but the input is acyclic (radius 0)")
    rb = estimate_radius(a, ks, args.tol, report=report, cross_check=args.kostin or args.cross_check,
                         lower=True if args.kostin else None, max_iter=args.max_iter, seed=args.seed)
    out = {
        "n": a.n,
        "nnz": a.nnz,
        "method": rb.method,
        "radius": _exp(rb.exact_log_radius),
        "log_radius": _log_or_str(rb.exact_log_radius),
        "entries": [
            {
                "k": e.k,
                "log_upper": _log_or_str(e.log_upper),
                "upper": _exp(e.log_upper),
                "log_lower": _log_or_str(e.log_lower),
                "lower": _exp(e.log_lower),
                "converged": e.converged,
            }
            for e in rb.entries
        ],
    }
    print(json.dumps(out))
    return 0


def resolve_threads(config_threads: int, flag: int | None) -> int:
    """CLI flag beats SPECTRA_THREADS beats the config value."""
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return config_threads


def load_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    errs = config_errors(obj)
    if errs:
        raise UsageError(f"{path}: config has {len(errs)} schema violation(s):\n  " + "\n  ".join(errs))
    try:
        return ExperimentConfig.from_dict(obj)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def cmd_experiment(args) -> int:
    from . import svg

    config = load_config(args.config)
    threads = resolve_threads(config.threads, args.threads)
    out_path = args.out or config.output_path
    started = now_iso()
    records = []
    sink = open(out_path, "w", newline="\n") if out_path else sys.stdout
    try:
        for rec in iter_experiment(config, threads):
            records.append(rec)
            sink.write(dumps_record(rec, timings=args.timings) + "\n")
    finally:
        if out_path:
            sink.close()
    summary = summarize(records, config)
    summary = {"manifest": manifest(config.to_dict(), started=started), **summary}
    summary_text = json.dumps(summary, indent=2) + "\n"
    if out_path:
        base = Path(out_path)
        _sibling(base, ".summary.json").write_text(summary_text)
        if args.plot:
            _sibling(base, ".acyclic.svg").write_text(svg.acyclicity_curve(summary["points"]))
            radii = [_exp(r.log_radius) for r in records if not r.acyclic and r.log_radius is not None]
            _sibling(base, ".radius.svg").write_text(svg.radius_histogram(radii))
    else:
        sys.stderr.write(summary_text)
    if args.check and not summary["passed"]:
        failed = [f"d={p['d']}: {name}" for p in summary["points"] for name, ok in p["checks"].items() if not ok]
        sys.stderr.write("check failed: " + "; ".join(failed) + "\n")
        return 1
    return 0


def report_rows(records) -> list[dict]:
    if not records:
        return []
    rows = []
    for pt in summarize(records)["points"]:
        q = pt["radius_quantiles"] or {}
        rows.append({
            "d": pt["d"],
            "trials": pt["trials"],
            "acyclic_frac": pt["acyclic_fraction"],
            "wilson_lo": pt["wilson_95_interval"][0],
            "wilson_hi": pt["wilson_95_interval"][1],
            "formula": pt["formula_value"],
            "complex_frac": pt["complex_fraction"],
            "q01": q.get("q01"),
            "q50": q.get("q50"),
            "q99": q.get("q99"),
        })
    return rows


def cmd_report(args) -> int:
    try:
        with open(args.records) as fh:
            records = loads_records(fh)
    except OSError as exc:
        raise UsageError(f"{args.records}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{args.records}: {exc}") from None
    writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS, lineterminator="\r\n")
    writer.writeheader()
    for row in report_rows(records):
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectra", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a matrix and write it as Matrix Market")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=float, help="mean degree, p = d/n")
    g.add_argument("--p", type=float, help="edge probability")
    g.add_argument("--weights", default="normal", help="normal | rademacher | weibull:ALPHA | constant:C")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--self-loops", action="store_true")
    g.add_argument("-o", "--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="print the SCC structure report as JSON")
    a.add_argument("matrix")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("radius", help="print exact radius or two-sided bounds as JSON")
    r.add_argument("matrix")
    r.add_argument("--k", default="1,2,4,8,16,32,64", help="comma-separated powers")
    r.add_argument("--kostin", action="store_true", help="add explicit lower bounds (needs n > 2)")
    r.add_argument("--cross-check", action="store_true", help="also bound matrices with an exact radius")
    r.add_argument("--tol", type=float, default=1e-10)
    r.add_argument("--max-iter", type=int, default=2000)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_radius)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    e.add_argument("config")
    e.add_argument("--out", help="JSONL output path (overrides output_path)")
    e.add_argument("--threads", type=int, help=f"worker count, overrides {THREADS_ENV}")
    e.add_argument("--plot", action="store_true", help="also write SVG plots next to the output")
    e.add_argument("--check", action="store_true", help="exit 1 when a tolerance check fails")
    e.add_argument("--timings", action="store_true", help="include wall times (output no longer reproducible)")
    e.set_defaults(func=cmd_experiment)

    rp = sub.add_parser("report", help="CSV summary of a JSONL records file")
    rp.add_argument("records")
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"spectra {args.command}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
