"""Command-line entry point for the pipeline-evolution experiments.

Subcommands: inject, evolve, score, benchmark, report. A benchmark walks
dataset x repetition x arm, evolving on the injected (missing) arm and,
when requested, the untouched (complete) control arm, then aggregates
records into the report files. Every run's randomness derives from the
master seed, the dataset id, and the repetition index, so reruns with
the same arguments reproduce the same records byte for byte.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed

import numpy as np

from .analysis import (
    ExperimentRecord,
    canonical_record_order,
    frequency_tables,
    holdout_score,
    majority_accuracy,
    pairwise_rank_test,
    pipeline_component_names,
    read_records,
    write_imputer_freq,
    write_pair_freq,
    write_records,
    write_significance,
)
from .data import load_csv, stratified_split, write_csv
from .evolve import EvolutionConfig, derive_seed, evolve
from .grammar import default_grammar, parse_tree, serialize_tree
from .injection import InjectionConfig, inject_mcar

MISSING_ARM = "missing"
COMPLETE_ARM = "complete"

_CONFIG_COERCERS = {
    "rate": float,
    "train_frac": float,
    "seed": int,
    "pop": int,
    "gens": int,
    "folds": int,
    "reps": int,
    "jobs": int,
    "no_impute": lambda v: v.strip().lower() in ("1", "true", "yes"),
    "missing_tokens": str,
    "out_dir": str,
}


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_COERCERS:
                raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
            values[key] = _CONFIG_COERCERS[key](value.strip())
    return values


def _tokens(arg):
    return frozenset(arg.split(","))


def _dataset_id(path):
    return os.path.splitext(os.path.basename(path))[0]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="imputree",
        description="Evolve imputation-aware classification pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = []

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="key=value file supplying any flag")
        sp.add_argument(
            "--missing-tokens",
            default=",NaN,NA,?",
            help="comma-separated CSV tokens read as missing",
        )
        subparsers.append(sp)
        return sp

    sp = add("inject", "blank a fraction of feature cells in a CSV")
    sp.add_argument("--rate", type=float, default=0.07)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("input")
    sp.add_argument("output")

    sp = add("evolve", "evolve pipelines on one dataset and score the best")
    _add_run_flags(sp)
    sp.add_argument("dataset")

    sp = add("score", "refit a stored pipeline on train and score on test")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("pipeline")
    sp.add_argument("train")
    sp.add_argument("test")

    sp = add("benchmark", "full protocol over datasets x repetitions")
    _add_run_flags(sp)
    sp.add_argument("--reps", type=int, default=20)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("datasets", nargs="+")

    sp = add("report", "rebuild report files from records.csv")
    sp.add_argument("--out-dir", default=".")

    return parser, subparsers


def _add_run_flags(sp):
    sp.add_argument("--rate", type=float, default=0.07)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--pop", type=int, default=100)
    sp.add_argument("--gens", type=int, default=50)
    sp.add_argument("--folds", type=int, default=3)
    sp.add_argument("--train-frac", type=float, default=0.75)
    sp.add_argument("--no-impute", action="store_true")
    sp.add_argument("--out-dir", default=".")


def _parse_args(argv):
    parser, subparsers = _build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            overrides = _read_config_file(known.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        for sp in subparsers:
            sp.set_defaults(**overrides)
    return parser, parser.parse_args(argv)


# --- single experimental unit ----------------------------------------------


def _run_unit(payload):
    """One (dataset, repetition, arm) evolution run; returns record fields.

    Top-level so a process pool can execute it; all inputs come in as a
    plain dict and the result leaves as one.
    """
    started = time.perf_counter()
    data = load_csv(payload["csv_path"], frozenset(payload["tokens"]))
    seed_r = derive_seed(payload["master_seed"], payload["dataset_id"], payload["rep"])
    arm = payload["arm"]
    if arm == MISSING_ARM:
        work = inject_mcar(
            data,
            InjectionConfig(rate=payload["rate"], seed=derive_seed(seed_r, "inject")),
        )
        rate = payload["rate"]
    else:
        work = data
        rate = 0.0
    split = stratified_split(work, payload["train_frac"], derive_seed(seed_r, "split"))
    grammar = default_grammar(include_imputers=(arm == MISSING_ARM))
    cfg = EvolutionConfig(
        pop_size=payload["pop"],
        generations=payload["gens"],
        cv_folds=payload["folds"],
        seed=derive_seed(seed_r, "evolve", arm),
    )
    progress = None
    if payload.get("verbose"):
        label = f"{payload['dataset_id']} rep {payload['rep']} {arm}"

        def progress(gen, best, front):
            print(f"[{label}] gen {gen:3d} best_cv={best:.4f} front={front}")

    result = evolve(split.train, grammar, cfg, progress=progress)
    best = result.hof[0]
    accuracy = holdout_score(
        best.tree, split.train, split.test, derive_seed(seed_r, "holdout", arm)
    )
    imputer, classifier = pipeline_component_names(best.tree)
    return {
        "dataset_id": payload["dataset_id"],
        "run_seed": seed_r,
        "missing_rate": rate,
        "best_pipeline": serialize_tree(best.tree),
        "holdout_accuracy": accuracy,
        "imputer_name": imputer,
        "classifier_name": classifier,
        "generations_run": payload["gens"],
        "wall_time": time.perf_counter() - started,
        "majority": majority_accuracy(split.train.labels, split.test.labels),
        "cv_accuracy": best.accuracy,
    }


def _record_from_result(fields):
    return ExperimentRecord(
        dataset_id=fields["dataset_id"],
        run_seed=fields["run_seed"],
        missing_rate=fields["missing_rate"],
        best_pipeline=fields["best_pipeline"],
        holdout_accuracy=fields["holdout_accuracy"],
        imputer_name=fields["imputer_name"],
        classifier_name=fields["classifier_name"],
        generations_run=fields["generations_run"],
        wall_time=fields["wall_time"],
    )


# --- subcommands ------------------------------------------------------------


def cmd_inject(args):
    if not 0 <= args.rate < 1:
        print("inject: --rate must lie in [0, 1)", file=sys.stderr)
        return 2
    data = load_csv(args.input, _tokens(args.missing_tokens))
    out = inject_mcar(data, InjectionConfig(rate=args.rate, seed=args.seed))
    write_csv(out, args.output)
    n_missing = int(np.isnan(out.values).sum())
    print(f"wrote {args.output} with {n_missing} blanked cells")
    return 0


def _records_path(out_dir):
    return os.path.join(out_dir, "records.csv")


def _load_manifest(out_dir):
    path = _records_path(out_dir)
    if not os.path.exists(path):
        return []
    return read_records(path)


def _flush_records(out_dir, records):
    write_records(_records_path(out_dir), records)


def cmd_evolve(args):
    os.makedirs(args.out_dir, exist_ok=True)
    dataset_id = _dataset_id(args.dataset)
    arm = COMPLETE_ARM if args.no_impute else MISSING_ARM
    payload = {
        "csv_path": args.dataset,
        "tokens": sorted(_tokens(args.missing_tokens)),
        "dataset_id": dataset_id,
        "rep": 0,
        "arm": arm,
        "rate": args.rate,
        "train_frac": args.train_frac,
        "pop": args.pop,
        "gens": args.gens,
        "folds": args.folds,
        "master_seed": args.seed,
        "verbose": True,
    }
    fields = _run_unit(payload)
    record = _record_from_result(fields)

    pipeline_path = os.path.join(args.out_dir, f"{dataset_id}_{arm}.pipeline.txt")
    with open(pipeline_path, "w") as fh:
        fh.write(record.best_pipeline + "\n")

    records = _load_manifest(args.out_dir)
    key = (record.dataset_id, record.run_seed, record.missing_rate)
    if key not in {(r.dataset_id, r.run_seed, r.missing_rate) for r in records}:
        records.append(record)
        _flush_records(args.out_dir, canonical_record_order(records))
    print(
        f"{dataset_id} [{arm}] holdout={record.holdout_accuracy:.4f} "
        f"majority={fields['majority']:.4f} pipeline={record.best_pipeline}"
    )
    return 0


def cmd_score(args):
    grammar = default_grammar()
    with open(args.pipeline) as fh:
        tree = parse_tree(fh.read().strip(), grammar)
    tokens = _tokens(args.missing_tokens)
    train = load_csv(args.train, tokens)
    test = load_csv(args.test, tokens)
    accuracy = holdout_score(tree, train, test, args.seed)
    print(f"holdout_accuracy={accuracy!r}")
    return 0


def cmd_benchmark(args):
    if not 0 <= args.rate < 1:
        print("benchmark: --rate must lie in [0, 1)", file=sys.stderr)
        return 2
    os.makedirs(args.out_dir, exist_ok=True)
    started = time.perf_counter()
    arms = [MISSING_ARM] + ([COMPLETE_ARM] if args.no_impute else [])
    records = _load_manifest(args.out_dir)
    done = {(r.dataset_id, r.run_seed, r.missing_rate) for r in records}

    pending = []
    for path in args.datasets:
        dataset_id = _dataset_id(path)
        for rep in range(args.reps):
            seed_r = derive_seed(args.seed, dataset_id, rep)
            for arm in arms:
                rate = args.rate if arm == MISSING_ARM else 0.0
                if (dataset_id, seed_r, rate) in done:
                    continue
                pending.append(
                    {
                        "csv_path": path,
                        "tokens": sorted(_tokens(args.missing_tokens)),
                        "dataset_id": dataset_id,
                        "rep": rep,
                        "arm": arm,
                        "rate": args.rate,
                        "train_frac": args.train_frac,
                        "pop": args.pop,
                        "gens": args.gens,
                        "folds": args.folds,
                        "master_seed": args.seed,
                        "verbose": args.jobs == 1,
                    }
                )

    failures = []
    extras = {}

    def consume(payload, fields):
        record = _record_from_result(fields)
        records.append(record)
        extras[(record.dataset_id, record.run_seed, record.missing_rate)] = fields
        _flush_records(args.out_dir, records)
        print(
            f"done {payload['dataset_id']} rep {payload['rep']} {payload['arm']}: "
            f"holdout={record.holdout_accuracy:.4f}"
        )

    if args.jobs > 1 and pending:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_run_unit, p): p for p in pending}
            for future in as_completed(futures):
                payload = futures[future]
                try:
                    consume(payload, future.result())
                except Exception as exc:
                    failures.append((payload, str(exc)))
    else:
        for payload in pending:
            try:
                consume(payload, _run_unit(payload))
            except Exception as exc:
                failures.append((payload, str(exc)))

    records = canonical_record_order(records)
    _flush_records(args.out_dir, records)
    _write_reports(args.out_dir, records)
    _write_summary(
        args.out_dir, records, failures, time.perf_counter() - started, extras
    )

    for payload, message in failures:
        print(
            f"FAILED {payload['dataset_id']} rep {payload['rep']} "
            f"{payload['arm']}: {message}",
            file=sys.stderr,
        )
    print(f"{len(records)} records, {len(failures)} failures -> {args.out_dir}")
    return 1 if failures else 0


def _arm_of(record):
    return MISSING_ARM if record.missing_rate > 0 else COMPLETE_ARM


def _write_reports(out_dir, records, echo=False):
    missing_records = [r for r in records if r.imputer_name is not None]
    if missing_records:
        imputer_counts, pair_counts, coverage = frequency_tables(missing_records)
    else:
        imputer_counts, pair_counts, coverage = {}, {}, {}
    write_imputer_freq(os.path.join(out_dir, "imputer_freq.csv"), imputer_counts)
    write_pair_freq(os.path.join(out_dir, "pair_freq.csv"), pair_counts, coverage)

    rows = []
    for dataset in sorted({r.dataset_id for r in records}):
        by_arm = {MISSING_ARM: [], COMPLETE_ARM: []}
        for r in records:
            if r.dataset_id == dataset:
                by_arm[_arm_of(r)].append(r)
        a = sorted(by_arm[MISSING_ARM], key=lambda r: r.run_seed)
        b = sorted(by_arm[COMPLETE_ARM], key=lambda r: r.run_seed)
        if len(a) == len(b) and len(a) >= 5:
            p = pairwise_rank_test(
                [r.holdout_accuracy for r in a], [r.holdout_accuracy for r in b]
            )
            rows.append((dataset, p))
            if echo:
                print(f"{dataset}: p={p:.6f}")
    write_significance(os.path.join(out_dir, "significance.csv"), rows)


def _write_summary(out_dir, records, failures, elapsed, extras):
    lines = [
        f"runs_completed: {len(records)}",
        f"runs_failed: {len(failures)}",
    ]
    for dataset in sorted({r.dataset_id for r in records}):
        for arm in (MISSING_ARM, COMPLETE_ARM):
            accs = [
                r.holdout_accuracy
                for r in records
                if r.dataset_id == dataset and _arm_of(r) == arm
            ]
            if not accs:
                continue
            lines.append(
                f"{dataset} {arm}: n={len(accs)} "
                f"mean_holdout={np.mean(accs):.4f} std={np.std(accs):.4f}"
            )
    for payload, message in failures:
        lines.append(
            f"failed: {payload['dataset_id']} rep {payload['rep']} "
            f"{payload['arm']}: {message}"
        )
    times = [f["wall_time"] for f in extras.values()]
    if times:
        lines.append(f"mean_run_wall_time_s: {np.mean(times):.2f}")
    lines.append(f"total_wall_time_s: {elapsed:.2f}")
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_report(args):
    path = _records_path(args.out_dir)
    if not os.path.exists(path):
        print(f"report: no records at {path}", file=sys.stderr)
        return 1
    records = canonical_record_order(read_records(path))
    _write_records_and_reports(args.out_dir, records)
    print(f"rebuilt reports for {len(records)} records in {args.out_dir}")
    return 0


def _write_records_and_reports(out_dir, records):
    _flush_records(out_dir, records)
    _write_reports(out_dir, records, echo=True)


def main(argv=None):
    parser, args = _parse_args(argv)
    handlers = {
        "inject": cmd_inject,
        "evolve": cmd_evolve,
        "score": cmd_score,
        "benchmark": cmd_benchmark,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
