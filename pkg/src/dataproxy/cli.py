"""Command-line front end: ``gen``, ``eval``, ``simulate``, ``figure``.

Every command is deterministic given identical inputs and flags, writes
outputs atomically, and exits nonzero with a machine-readable error category
(the exception class name) on failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import io
from .datamodel import DEFAULT_CONSTANTS, ImportanceConstants
from .exceptions import DataProxyError, DegenerateInput, MissingOutcome
from .harness import (
    ExperimentReport,
    SyntheticDatasetSpec,
    build_search_space,
    run_experiment,
)
from .pipeline import build_proxy
from .ranking import agreement_matrix, best_config_preserved, rank_report, render_agreement_figure
from .sampling import LabelStage, ProxySpec


def _parse_constants(raw: str) -> ImportanceConstants:
    parts = raw.split(",")
    if len(parts) != 4:
        raise DegenerateInput(
            f"--constants needs four comma-separated numbers "
            f"(both-correct,both-incorrect,aligned,opposed), got {raw!r}"
        )
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise DegenerateInput(f"--constants values must be numbers, got {raw!r}") from None
    return ImportanceConstants(*values)


def _parse_label_stage(raw: str) -> LabelStage:
    if ":" not in raw:
        raise DegenerateInput(
            f"--label-stage must look like 'sample-first:0.5' or 'label-first:0.2', got {raw!r}"
        )
    mode, _, ratio = raw.partition(":")
    try:
        return LabelStage(intermediate_ratio=float(ratio), mode=mode)
    except ValueError:
        raise DegenerateInput(f"--label-stage ratio must be a number, got {ratio!r}") from None


def _parse_number_list(raw: str, kind, flag: str) -> list:
    try:
        return [kind(p) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise DegenerateInput(f"{flag} must be comma-separated numbers, got {raw!r}") from None


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", name).strip("-") or "unnamed"


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _print(message: str) -> None:
    sys.stdout.write(message + "\n")


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    manifest = io.read_manifest(args.manifest)
    outcomes = io.read_outcomes(args.outcomes)
    train_features = io.read_features(args.train_features)
    test_features = io.read_features(args.test_features)
    spec = ProxySpec(
        target_ratio=args.ratio,
        seed=args.seed,
        label_stage=args.label_stage,
        constants=args.constants,
    )
    try:
        result = build_proxy(
            manifest,
            outcomes,
            train_features,
            test_features,
            spec,
            pca_dim=args.pca_dim,
            metric=args.metric,
        )
    except MissingOutcome as err:
        raise MissingOutcome(f"{args.outcomes}: {err}") from None

    selection = replace(
        result.selection,
        provenance={
            **result.selection.provenance,
            "input_files": {
                "manifest": _file_digest(args.manifest),
                "outcomes": _file_digest(args.outcomes),
                "train_features": _file_digest(args.train_features),
                "test_features": _file_digest(args.test_features),
            },
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_selection(out / "selection.json", selection)
    io.write_importance(out / "importance-test.tsv", result.test_importance)
    io.write_importance(out / "importance-train.tsv", result.train_importance)

    _print(
        f"kept {len(selection.kept_train_ids)} of {len(manifest.train_ids)} train samples, "
        f"{len(selection.kept_labels)} of {manifest.num_labels} labels"
    )
    _print("case counts: " + json.dumps(result.case_counts, sort_keys=True))
    _print(f"wrote {out / 'selection.json'}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    reference = io.read_accuracy_table(args.reference)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for candidate_path in args.candidates:
        candidate = io.read_accuracy_table(candidate_path)
        report = rank_report(reference, candidate)
        slug = _slug(candidate.variant_name)
        io.write_report(out / f"report-{slug}.json", report)
        if args.figure:
            figure = render_agreement_figure(
                report.agreement,
                report.config_ids,
                best_config_id=report.reference_best_id,
                path=str(out / f"figure-{slug}.svg"),
                title=f"{reference.variant_name} vs {candidate.variant_name}",
            )
            io.write_text_file(out / f"grid-{slug}.txt", figure["grid"])
        _print(
            f"{candidate.variant_name}: pearson={report.correlation_pearson:.4f} "
            f"spearman={report.correlation_spearman:.4f} "
            f"best_preserved={str(report.best_preserved).lower()} "
            f"flipped_pairs={report.flipped_pair_count}"
        )
    return 0


# ---------------------------------------------------------------------------
# simulate


def _load_experiment_config(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        try:
            config = json.load(handle)
        except json.JSONDecodeError as err:
            raise DegenerateInput(f"{path}: not valid JSON: {err}") from None
    for field in ("dataset", "search_space", "ratios", "seeds"):
        if field not in config:
            raise DegenerateInput(f"{path}: missing field {field!r}")
    return config


def _write_experiment(out: Path, report: ExperimentReport) -> None:
    io.write_accuracy_table(out / "table-original.csv", report.original)
    lines = [
        "# dpx-variant-reports v1",
        "method\tratio\tseed\tproxy_seed\tpearson\tspearman\tbest_preserved"
        "\tflipped_pairs\tkept_labels\tnon_converged",
    ]
    for variant in report.variants:
        slug = f"{variant.method}-r{variant.ratio:g}-s{variant.seed}"
        io.write_accuracy_table(out / f"table-{slug}.csv", variant.table)
        io.write_report(out / f"report-{slug}.json", variant.report)
        lines.append(
            "\t".join(
                [
                    variant.method,
                    f"{variant.ratio:g}",
                    str(variant.seed),
                    str(variant.proxy_seed),
                    repr(variant.report.correlation_pearson),
                    repr(variant.report.correlation_spearman),
                    str(variant.report.best_preserved).lower(),
                    str(variant.report.flipped_pair_count),
                    ",".join(str(label) for label in variant.kept_labels),
                    ",".join(variant.non_converged) or "-",
                ]
            )
        )
    io.write_text_file(out / "variants.tsv", "\n".join(lines) + "\n")
    summary = {
        "format": io.SUMMARY_FORMAT,
        "version": io.FORMAT_VERSION,
        "original_non_converged": list(report.original_non_converged),
        **report.summary,
    }
    io.write_text_file(out / "summary.json", json.dumps(summary, indent=1) + "\n")


def cmd_simulate(args) -> int:
    config = _load_experiment_config(args.config)
    dataset_spec = SyntheticDatasetSpec(**config["dataset"])
    search_space = build_search_space(**config["search_space"])
    ratios = args.ratios if args.ratios is not None else [float(r) for r in config["ratios"]]
    seeds = args.seeds if args.seeds is not None else [int(s) for s in config["seeds"]]
    constants = (
        ImportanceConstants(*config["constants"]) if "constants" in config else DEFAULT_CONSTANTS
    )
    if args.constants is not None:
        constants = args.constants
    stage_config = config.get("label_stage")
    label_stage = (
        LabelStage(
            intermediate_ratio=float(stage_config["intermediate_ratio"]),
            mode=stage_config["mode"],
        )
        if stage_config
        else None
    )
    if args.label_stage is not None:
        label_stage = args.label_stage

    started = time.monotonic()
    report = run_experiment(
        dataset_spec,
        search_space,
        ratios=ratios,
        seeds=seeds,
        constants=constants,
        pca_dim=config.get("pca_dim"),
        metric=config.get("metric", "euclidean"),
        label_stage=label_stage,
    )
    elapsed = time.monotonic() - started

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_experiment(out, report)

    for method, stats in report.summary["methods"].items():
        _print(
            f"{method}: mean_pearson={stats['mean_pearson']:.4f} "
            f"mean_spearman={stats['mean_spearman']:.4f} "
            f"best_preserved_rate={stats['best_preserved_rate']:.2f} over {stats['runs']} runs"
        )
    if "margins" in report.summary:
        margins = report.summary["margins"]
        _print(
            f"margins (ours - random): spearman={margins['spearman']:+.4f} "
            f"pearson={margins['pearson']:+.4f} "
            f"best_preserved_rate={margins['best_preserved_rate']:+.2f}"
        )
    _print(f"completed in {elapsed:.1f}s, wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# figure


def cmd_figure(args) -> int:
    reference = io.read_accuracy_table(args.reference)
    candidate = io.read_accuracy_table(args.candidate)
    matrix = agreement_matrix(reference, candidate)
    _, reference_best, _ = best_config_preserved(reference, candidate)
    figure = render_agreement_figure(
        matrix,
        reference.config_ids(),
        best_config_id=reference_best,
        path=args.out,
        title=f"{reference.variant_name} vs {candidate.variant_name}",
    )
    if args.grid:
        io.write_text_file(args.grid, figure["grid"])
    counts = figure["counts"]
    _print(
        f"wrote {args.out} (preserved={counts['preserved']} flipped={counts['flipped']} "
        f"tied={counts['tied']})"
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dataproxy",
        description=(
            "Generate importance-resampled training-data proxies and evaluate "
            "how well they preserve configuration rankings."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a proxy selection from probe artifacts")
    gen.add_argument("--manifest", required=True, help="dataset manifest file")
    gen.add_argument("--outcomes", required=True, help="probe outcomes file")
    gen.add_argument("--train-features", required=True, help="train-split feature file")
    gen.add_argument("--test-features", required=True, help="test-split feature file")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--ratio", type=float, default=0.1, help="target fraction of train samples")
    gen.add_argument("--seed", type=int, default=0, help="resampling seed")
    gen.add_argument(
        "--constants",
        type=_parse_constants,
        default=DEFAULT_CONSTANTS,
        help="importance constants: both-correct,both-incorrect,aligned,opposed",
    )
    gen.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")
    gen.add_argument("--pca-dim", type=int, default=None, help="projection dimension")
    gen.add_argument(
        "--label-stage",
        type=_parse_label_stage,
        default=None,
        help="label reduction stage, e.g. sample-first:0.5 or label-first:0.2",
    )
    gen.set_defaults(func=cmd_gen)

    ev = sub.add_parser("eval", help="score candidate accuracy tables against a reference")
    ev.add_argument("--reference", required=True, help="reference accuracy table")
    ev.add_argument("candidates", nargs="+", help="candidate accuracy tables")
    ev.add_argument("--out", required=True, help="output directory")
    ev.add_argument("--figure", action="store_true", help="also render agreement heatmaps")
    ev.set_defaults(func=cmd_eval)

    sim = sub.add_parser("simulate", help="run the synthetic proxy-vs-random experiment")
    sim.add_argument("--config", required=True, help="experiment config JSON")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument(
        "--ratios", type=lambda raw: _parse_number_list(raw, float, "--ratios"), default=None
    )
    sim.add_argument(
        "--seeds", type=lambda raw: _parse_number_list(raw, int, "--seeds"), default=None
    )
    sim.add_argument("--constants", type=_parse_constants, default=None)
    sim.add_argument("--label-stage", type=_parse_label_stage, default=None)
    sim.set_defaults(func=cmd_simulate)

    fig = sub.add_parser("figure", help="render one agreement heatmap")
    fig.add_argument("--reference", required=True, help="reference accuracy table")
    fig.add_argument("--candidate", required=True, help="candidate accuracy table")
    fig.add_argument("--out", required=True, help="image path (.svg or .png)")
    fig.add_argument("--grid", default=None, help="optional text-grid output path")
    fig.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except DataProxyError as err:
        sys.stderr.write(f"dataproxy: error: {err.category}: {err}\n")
        return 1
    except OSError as err:
        sys.stderr.write(f"dataproxy: error: IOError: {err}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
