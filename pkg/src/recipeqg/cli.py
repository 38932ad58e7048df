"""Command line front end for dataset builds, augmentation and scoring."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .augment import answer_based_augment, paraphrase_augment
from .backends import BackendError, http_client
from .flowgraph import FlowGraphError
from .metrics import EmptyGenerated, EmptyReference, UnknownScorer
from .pipeline import (
    DatasetRecord,
    PipelineConfig,
    PipelineError,
    evaluate,
    ingest,
    run,
)

_FAILURES = (PipelineError, BackendError, FlowGraphError, UnknownScorer,
             EmptyReference, EmptyGenerated, ValueError, OSError)


def _config_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "threshold", None) is not None:
        overrides["threshold"] = args.threshold
    if getattr(args, "offline", False):
        overrides.update(backend=None, paraphrase=False, answer_based=False)
    return overrides


def _read_records(path: Path) -> list[dict]:
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def _write_records(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def _cmd_gen(args) -> int:
    config = PipelineConfig.from_file(args.config, **_config_overrides(args))
    summary = run(config)
    for note in summary.diagnostics:
        print(f"warning: {note}", file=sys.stderr)
    print(f"wrote {summary.records} records for {summary.recipes} recipes"
          f" to {summary.output_path}")
    for category, count in summary.by_category.items():
        print(f"  {category} {count}")
    for kind, count in sorted(summary.skips.items()):
        print(f"  skipped {kind} {count}")
    for method, stats in summary.augmentation.items():
        print(f"  {method} kept {stats['kept']} dropped {stats['dropped']}"
              f" skipped {stats['skipped']}")
    return 0


def _cmd_augment(args) -> int:
    config = PipelineConfig.from_file(
        args.config, recipes_path="unused", output_path="unused", single=False,
        temporal=False, **_config_overrides(args))
    if not config.paraphrase and not config.answer_based:
        raise PipelineError("config enables no augmentation stage")
    if config.backend is None:
        raise PipelineError("augmentation needs a backend in the config")
    client = http_client(config.backend)
    records = _read_records(Path(args.input))
    before = len(records)
    if config.paraphrase:
        records = list(paraphrase_augment(records, client,
                                          k=config.paraphrase_k))
    if config.answer_based:
        records = list(answer_based_augment(
            records, client, n_per_answer=config.n_per_answer,
            threshold=config.threshold))
    for record in records:
        DatasetRecord.from_dict(record)
    _write_records(Path(args.output), records)
    print(f"added {len(records) - before} records"
          f" ({before} in, {len(records)} out) to {args.output}")
    return 0


def _cmd_eval(args) -> int:
    report = evaluate(args.generated, args.reference, scorer=args.scorer,
                      out_path=args.out)
    cov = report["coverage"]
    print(f"coverage {cov['coverage']:.3f}"
          f" ({cov['n_reference']} references, {cov['n_generated']} generated,"
          f" scorer {cov['scorer']})")
    print(f"ngram_diversity {report['diversity']['ngram_diversity']:.3f}"
          f" over {report['diversity']['question_count']} questions")
    return 0


def _cmd_validate(args) -> int:
    docs = ingest(args.recipes)
    for note in docs.diagnostics:
        print(f"error: {note}", file=sys.stderr)
    print(f"{len(docs)} valid recipes")
    return 1 if docs.diagnostics else 0


def _cmd_ping(args) -> int:
    config = PipelineConfig.from_file(
        args.config, recipes_path="unused", output_path="unused",
        single=False, temporal=False)
    if config.backend is None:
        raise PipelineError("config has no backend section")
    status = http_client(config.backend).health()
    models = ",".join(status.get("models", []))
    print(f"{status.get('status', 'unknown')} models={models}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recipeqg",
        description="Generate, augment and score recipe QA datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p, threshold=False):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--offline", action="store_true",
                       help="drop the backend and backend-only stages")
        if threshold:
            p.add_argument("--threshold", type=float,
                           help="override the round-trip filter threshold")

    gen = sub.add_parser("gen", help="build a dataset from a recipe corpus")
    add_shared(gen, threshold=True)
    gen.set_defaults(func=_cmd_gen)

    augment = sub.add_parser("augment", help="extend an existing dataset")
    augment.add_argument("input", help="dataset to read (JSON Lines)")
    augment.add_argument("output", help="dataset to write")
    add_shared(augment, threshold=True)
    augment.set_defaults(func=_cmd_augment)

    ev = sub.add_parser("eval", help="score generated questions")
    ev.add_argument("generated", help="generated dataset (JSON Lines)")
    ev.add_argument("reference", help="reference questions (JSON Lines)")
    ev.add_argument("--scorer", default="rouge1")
    ev.add_argument("--out", help="write the report as JSON here")
    ev.set_defaults(func=_cmd_eval)

    validate = sub.add_parser("validate", help="check a recipe file")
    validate.add_argument("recipes")
    validate.set_defaults(func=_cmd_validate)

    backends = sub.add_parser("backends", help="backend utilities")
    backends_sub = backends.add_subparsers(dest="backend_command",
                                           required=True)
    ping = backends_sub.add_parser("ping", help="call the health route")
    ping.add_argument("--config", required=True)
    ping.set_defaults(func=_cmd_ping)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _FAILURES as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
