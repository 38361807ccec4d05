"""Command-line interface: ``survbench {generate,benchmark,ablate,evaluate,report}``.

Exit codes: 0 success, 1 validation or configuration error, 2 the run
finished but some cells failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .exceptions import SurvivalError
from .harness import run_ablation, run_benchmark
from .io import (
    CsvSchema,
    emit_ablation,
    emit_report,
    ingest_csv,
    load_config,
    load_report_json,
    read_prediction_csv,
    save_report_json,
    write_dataset_csv,
)
from .metrics import evaluate
from .synthetic import KINDS, GeneratorSpec, generate

log = logging.getLogger("survbench")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2


def _cmd_generate(args) -> int:
    spec = GeneratorSpec(args.kind, args.n, args.seed, args.censoring)
    d, truth = generate(spec)
    out = Path(args.out)
    write_dataset_csv(d, out)
    sidecar = out.with_suffix(".truth.json")
    meta = {"kind": spec.kind, "n": spec.n, "seed": spec.seed, "censoring_target": spec.censoring_fraction,
            "censoring_realised": float(1.0 - d.events.mean()), **truth.to_dict()}
    sidecar.write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} and {sidecar}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    cfg = load_config(args.config)
    datasets = [(entry.name, entry.load()) for entry in cfg.datasets]
    report = run_benchmark(datasets, cfg.methods, cfg.plan, cfg.quantiles, cfg.n_jobs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_report_json(report, out / "report.json")
    for fmt in ("csv", "json"):
        emit_report(report, fmt, out)
    for r in report.failed:
        log.error("failed cell %s/%s fold %d: %s", r.dataset, r.method, r.fold, r.error)
    print(f"{len(report.rows)} fold results written to {out}")
    return EXIT_PARTIAL if report.failed else EXIT_OK


def _cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    if cfg.ablation is None:
        raise SurvivalError("config has no 'ablation' section")
    a = cfg.ablation
    rows = run_ablation(a.pool, a.sizes, cfg.methods, cfg.plan, a.holdout, a.censored_fraction,
                        cfg.quantiles, cfg.n_jobs, a.seed)
    for fmt in ("csv", "json"):
        emit_ablation(rows, fmt, args.out_dir)
    print(f"{len(rows)} ablation rows written to {args.out_dir}")
    return EXIT_PARTIAL if any(r.error for r in rows) else EXIT_OK


def _cmd_evaluate(args) -> int:
    d = ingest_csv(args.data, CsvSchema())
    pred = read_prediction_csv(args.pred)
    text = json.dumps(evaluate(pred, d).to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = load_report_json(args.input)
    out = Path(args.out_dir) if args.out_dir else Path(args.input).parent
    for path in emit_report(report, args.format, out):
        print(path)
    return EXIT_PARTIAL if report.failed else EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors, not partial failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="survbench", description="Survival model benchmark harness")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw a synthetic dataset")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--censoring", type=float, default=0.3, help="target censored fraction")
    g.add_argument("--out", required=True, help="dataset CSV; ground truth goes to <stem>.truth.json")
    g.set_defaults(func=_cmd_generate)

    b = sub.add_parser("benchmark", help="nested cross-validation over datasets x methods")
    b.add_argument("--config", required=True)
    b.add_argument("--out-dir", required=True)
    b.set_defaults(func=_cmd_benchmark)

    a = sub.add_parser("ablate", help="Antolini C-index versus training size")
    a.add_argument("--config", required=True)
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=_cmd_ablate)

    e = sub.add_parser("evaluate", help="score a prediction matrix against a dataset")
    e.add_argument("--pred", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", help="write the metrics JSON here instead of stdout")
    e.set_defaults(func=_cmd_evaluate)

    r = sub.add_parser("report", help="re-emit tables from a saved report.json")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--format", choices=("csv", "json"), required=True)
    r.add_argument("--out-dir", help="defaults to the directory of --in")
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SurvivalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
