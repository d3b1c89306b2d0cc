"""
Command-line entry point.

    csal generate gdata1 --seed 7 -o gdata1.csv
    csal run gmm-csal gdata2.csv --labeler self-adaptive -a 60 --seed 3 -o out/
    csal sweep configs/labeling_strategies.json
    csal bench configs/runtime.json

Exit status is 0 on success, 1 when a run fails and 2 for usage errors.
"""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from csal_classifier import __version__
from csal_classifier.config import load_config, store_manifest
from csal_classifier.controller import AlgorithmVariant
from csal_classifier.data import PRESETS, generate_gaussian, load_gaussian_spec, save_csv
from csal_classifier.errors import CsalError, ValidationError
from csal_classifier.evaluation.experiments import (
    ExperimentConfig, expand_grid, run_cell, run_experiments, summarize, timing_table,
)
from csal_classifier.processing.labeling import DEFAULT_THRESHOLD
from csal_classifier.storage.result_storage import ResultSink, RunStorage

logger = logging.getLogger(__name__)

LABELER_CHOICES = ["distance", "entropy", "self-adaptive"]
SWEEP_GROUPS = ["dataset", "algorithm", "labeler", "percent_a"]
BENCH_REPEATS = 3


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="log every iteration (DEBUG)")
    verbosity.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="csal", description="Clustering with self-adaptive labeling")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", parents=[common], help="write a synthetic Gaussian dataset")
    generate.add_argument("source", help=f"preset ({', '.join(sorted(PRESETS))}) or a JSON spec file")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("-o", "--out", help="output CSV (default: <source>.csv)")

    run = commands.add_parser("run", parents=[common], help="run one algorithm on one dataset")
    run.add_argument("algorithm", help="kmeans, fcm or gmm, optionally suffixed -cem, -csal or -nb")
    run.add_argument("dataset", help="gdata1, gdata2, iris, wine, heart, thyroid or a CSV path (label last)")
    run.add_argument("--labeler", choices=LABELER_CHOICES, default="self-adaptive")
    run.add_argument("-a", "--percent-a", type=float, default=60.0, help="percent of each cluster to label")
    run.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="mean silhouette threshold")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--k", type=int, help="number of clusters (default: number of classes)")
    run.add_argument("--max-iter", type=int, default=100)
    run.add_argument("--tol", type=float, default=1e-8)
    run.add_argument("--no-standardize", action="store_true", help="leave real datasets unscaled")
    run.add_argument("-o", "--out", default="results")

    for name, help_text in (("sweep", "run an experiment grid from a config file"),
                            ("bench", "time an experiment grid (warm-up and median of 3)")):
        command = commands.add_parser(name, parents=[common], help=help_text)
        command.add_argument("config", help="JSON experiment config or manifest")
        command.add_argument("--workers", type=int, help="override the config's worker count")
        command.add_argument("-o", "--out", help="override the config's output directory")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s", force=True)


def cmd_generate(args: argparse.Namespace) -> int:
    key = args.source.lower()
    if key in PRESETS:
        spec, name = PRESETS[key], key
    else:
        spec, name = load_gaussian_spec(args.source), Path(args.source).stem
    data = generate_gaussian(spec, args.seed, name=name)
    out = Path(args.out) if args.out else Path(f"{name}.csv")
    save_csv(data, out)
    print(f"wrote {data.n_points} rows, {data.n_classes} classes to {out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        dataset=args.dataset,
        algorithms=(args.algorithm,),
        labelers=(args.labeler,),
        percent_a_grid=(args.percent_a,),
        seeds=(args.seed,),
        output=args.out,
        threshold=args.threshold,
        max_iter=args.max_iter,
        tol=args.tol,
        k=args.k,
        data_seed=args.seed,
        standardize=False if args.no_standardize else None,
    )
    cfg.validate()
    store_manifest(cfg)
    cell = expand_grid(cfg)[0]
    result = run_cell(cfg, cell, keep_outcome=True)
    ResultSink(Path(cfg.output) / "results.csv").append(result.row)
    if result.row["error"]:
        print(f"error: {result.row['error']}", file=sys.stderr)
        return 1

    outcome = result.outcome
    storage = RunStorage(cfg.output)
    storage.save_partition(outcome.partition)
    storage.save_trace(outcome.trace)
    if outcome.params is not None:
        storage.save_params(outcome.params)
    if outcome.subset is not None:
        storage.save_subset(outcome.subset)
    accuracy = result.row["accuracy"]
    accuracy_text = f"{accuracy:.4f}" if accuracy is not None else "n/a"
    print(f"{cell.algorithm} on {cell.dataset}: accuracy={accuracy_text}, iterations={result.row['iterations']}, "
          f"converged={result.row['converged']}, seconds={result.row['seconds']:.4f}")
    return 0


def _load_sweep_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.out is not None:
        cfg = replace(cfg, output=args.out)
    return cfg


def _finish_sweep(cfg: ExperimentConfig, results) -> int:
    output = Path(cfg.output)
    summary = summarize(results, SWEEP_GROUPS)
    summary.to_csv(output / "summary.csv", index=False)
    logger.info(f"Wrote {len(summary)} summary rows to {output / 'summary.csv'}")
    failed = int((results["error"].fillna("").astype(str) != "").sum()) if not results.empty else 0
    print(f"{len(results)} cells, {failed} failed; results in {output}")
    if len(results) and failed == len(results):
        return 1
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_sweep_config(args)
    cfg.validate()
    store_manifest(cfg, config_path=args.config)
    return _finish_sweep(cfg, run_experiments(cfg))


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _load_sweep_config(args)
    cfg = replace(cfg, warmup=True, repeats=max(cfg.repeats, BENCH_REPEATS))
    cfg.validate()
    store_manifest(cfg, config_path=args.config)
    results = run_experiments(cfg)
    table = timing_table(results)
    table.to_csv(Path(cfg.output) / "timing.csv", index=False)
    logger.info(f"Wrote timing table for {len(table)} algorithms to {Path(cfg.output) / 'timing.csv'}")
    return _finish_sweep(cfg, results)


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    if args.command == "run":
        try:
            AlgorithmVariant.parse(args.algorithm)
        except ValidationError as e:
            parser.error(str(e))

    try:
        return COMMANDS[args.command](args)
    except (CsalError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
