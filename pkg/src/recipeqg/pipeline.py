"""Recipe ingestion and the end-to-end dataset build.

A run turns a recipe file, per-sentence AMR graphs and per-recipe action
flow graphs into a question-answer dataset written as JSON Lines. Every
stage can be toggled independently, and each stage that would normally
call a model backend has an offline path, so a build with no backend
configured still produces the full rule-generated dataset.

Sentence AMRs come from a sidecar file whose blocks are keyed
``# ::id <recipe>.<sentence index>``; sentences the sidecar misses are
parsed through the backend when one is configured and tallied as skips
otherwise. Flow graphs live one file per recipe, ``<recipe id>.json``,
inside the configured directory.
"""
from __future__ import annotations

import json
import time
import zlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .amr import AmrError, AmrGraph, parse_penman, read_penman_file, serialize_penman
from .augment import answer_based_augment, paraphrase_augment
from .backends import (
    BackendConfig,
    BackendError,
    fallback_realizer,
    http_client,
    realize_phrase,
)
from .flowgraph import FlowGraph, ingredients_of, load_flowgraph, mixtures
from .metrics import coverage, diversity_report, get_scorer
from .qgen_single import (
    CATEGORIES,
    QaCandidate,
    QgenError,
    RuleLexicons,
    gen_all_single,
)
from .qgen_temporal import (
    MissingActionAmr,
    extract_action_amrs,
    gen_mixture_questions,
    gen_next_prev_questions,
    gen_order_questions,
    load_templates,
)

REALIZERS = ("neural", "fallback")

RECORD_FIELDS = (
    "qa_id", "recipe_id", "question", "answer", "category", "question_amr",
    "answer_amr", "provenance", "context", "realizer", "augmentation",
)


class PipelineError(Exception):
    pass


class SchemaViolation(PipelineError):
    """An input entry or output record does not match its schema."""


class MissingFlowGraph(PipelineError):
    """The temporal stage is enabled but a recipe has no flow graph."""


class BackendRequiredButUnavailable(PipelineError):
    """An enabled stage needs a backend and none is configured."""


def _require_sentences(name: str, value: Sequence[str]) -> tuple[str, ...]:
    items = tuple(value) if not isinstance(value, str) else None
    if not items or not all(isinstance(x, str) and x.strip() for x in items):
        raise SchemaViolation(f"{name} must be a non-empty list of strings")
    return items


@dataclass(frozen=True)
class RecipeDoc:
    """One recipe as ingested: title, ingredient list and step sentences."""

    id: str
    title: str
    ingredients: tuple[str, ...]
    steps: tuple[str, ...]

    def __post_init__(self):
        for name in ("id", "title"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise SchemaViolation(f"{name} must be a non-empty string")
        object.__setattr__(
            self, "ingredients", _require_sentences("ingredients", self.ingredients))
        object.__setattr__(
            self, "steps", _require_sentences("steps", self.steps))

    @classmethod
    def from_dict(cls, data: Any) -> RecipeDoc:
        if not isinstance(data, dict):
            raise SchemaViolation("recipe entry must be a JSON object")
        missing = [k for k in ("id", "title", "ingredients", "steps")
                   if k not in data]
        if missing:
            raise SchemaViolation(f"missing fields: {', '.join(missing)}")
        return cls(id=data["id"], title=data["title"],
                   ingredients=data["ingredients"], steps=data["steps"])


class IngestResult(list):
    """Valid recipes, in file order, plus diagnostics for rejected entries."""

    def __init__(self, docs=(), diagnostics=()):
        super().__init__(docs)
        self.diagnostics = list(diagnostics)


def ingest(path: str | Path) -> IngestResult:
    """Read recipes from a JSON array or JSON Lines file.

    Malformed entries are collected as diagnostics rather than failing the
    whole file; only a file with no valid recipe at all raises.
    """
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    diagnostics: list[str] = []
    entries: list[tuple[str, Any]] = []
    if raw.lstrip().startswith("["):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path} is not valid JSON: {exc}") from exc
        entries = [(f"entry {i}", entry) for i, entry in enumerate(data, 1)]
    else:
        for lineno, line in enumerate(raw.splitlines(), 1):
            if not line.strip():
                continue
            try:
                entries.append((f"line {lineno}", json.loads(line)))
            except json.JSONDecodeError as exc:
                diagnostics.append(f"line {lineno}: not valid JSON ({exc.msg})")
    docs: list[RecipeDoc] = []
    seen: set[str] = set()
    for where, entry in entries:
        try:
            doc = RecipeDoc.from_dict(entry)
        except SchemaViolation as exc:
            diagnostics.append(f"{where}: {exc}")
            continue
        if doc.id in seen:
            diagnostics.append(f"{where}: duplicate recipe id {doc.id!r}")
            continue
        seen.add(doc.id)
        docs.append(doc)
    if not docs:
        detail = f" ({diagnostics[0]})" if diagnostics else ""
        raise SchemaViolation(f"no valid recipes in {path}{detail}")
    return IngestResult(docs, diagnostics)


def load_sentence_amrs(path: str | Path) -> dict[str, dict[int, AmrGraph]]:
    """Index a sidecar PENMAN file by recipe id and sentence index."""
    table: dict[str, dict[int, AmrGraph]] = {}
    for graph in read_penman_file(path):
        ident = graph.metadata.get("id", "")
        recipe, dot, index = ident.rpartition(".")
        if not dot or not recipe or not index.isdigit():
            raise SchemaViolation(
                f"sentence AMR id {ident!r} is not <recipe>.<sentence index>")
        per_recipe = table.setdefault(recipe, {})
        if int(index) in per_recipe:
            raise SchemaViolation(f"duplicate sentence AMR id {ident!r}")
        per_recipe[int(index)] = graph
    return table


@dataclass(frozen=True)
class DatasetRecord:
    """One emitted question-answer pair; mirrors the JSONL schema."""

    qa_id: str
    recipe_id: str
    question: str
    answer: str
    category: str
    question_amr: str
    answer_amr: str | None
    provenance: tuple[int, ...]
    context: str
    realizer: str
    augmentation: dict | None = None

    def __post_init__(self):
        for name in ("qa_id", "recipe_id", "question", "answer",
                     "question_amr", "context"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise SchemaViolation(f"{name} must be a non-empty string")
        if self.category not in CATEGORIES:
            raise SchemaViolation(f"unknown category {self.category!r}")
        if self.realizer not in REALIZERS:
            raise SchemaViolation(f"unknown realizer {self.realizer!r}")
        prov = tuple(self.provenance)
        if not all(isinstance(i, int) and i >= 0 for i in prov):
            raise SchemaViolation("provenance must hold sentence indices")
        object.__setattr__(self, "provenance", prov)
        if self.augmentation is not None and not isinstance(self.augmentation, dict):
            raise SchemaViolation("augmentation must be an object or null")

    def to_dict(self) -> dict:
        record = {name: getattr(self, name) for name in RECORD_FIELDS}
        record["provenance"] = list(self.provenance)
        return record

    @classmethod
    def from_dict(cls, data: Mapping) -> DatasetRecord:
        missing = [k for k in RECORD_FIELDS if k not in data]
        if missing:
            raise SchemaViolation(f"missing fields: {', '.join(missing)}")
        return cls(**{name: data[name] for name in RECORD_FIELDS})


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one dataset build needs; paths are kept absolute."""

    recipes_path: Path
    output_path: Path
    amr_path: Path | None = None
    flow_dir: Path | None = None
    summary_path: Path | None = None
    single: bool = True
    temporal: bool = True
    paraphrase: bool = False
    answer_based: bool = False
    backend: BackendConfig | None = None
    lexicon_dir: Path | None = None
    template_path: Path | None = None
    seed: int | None = None
    threshold: float = 0.25
    paraphrase_k: int = 5
    n_per_answer: int = 3
    workers: int = 1

    def __post_init__(self):
        for name in ("recipes_path", "output_path", "amr_path", "flow_dir",
                     "summary_path", "lexicon_dir", "template_path"):
            value = getattr(self, name)
            if name in ("recipes_path", "output_path") and value is None:
                raise ValueError(f"{name} is required")
            if value is not None:
                object.__setattr__(self, name, Path(value))
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.paraphrase_k < 1:
            raise ValueError("paraphrase_k must be at least 1")
        if self.n_per_answer < 0:
            raise ValueError("n_per_answer must not be negative")
        if self.single and self.seed is None:
            raise ValueError(
                "seed is required when the single-instruction stage is enabled")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> PipelineConfig:
        """Load a JSON config; relative paths resolve against the file.

        Keyword overrides replace the parsed values before validation, so
        command-line flags can fill in or nullify fields.
        """
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(key):
            value = data.get(key)
            return base / value if value is not None else None

        stages = data.get("stages", {})
        backend = data.get("backend")
        if backend is not None:
            try:
                backend = BackendConfig(**backend)
            except TypeError as exc:
                raise SchemaViolation(f"bad backend config in {path}: {exc}")
        kwargs = dict(
            recipes_path=resolve("recipes"),
            output_path=resolve("output"),
            amr_path=resolve("amrs"),
            flow_dir=resolve("flows"),
            summary_path=resolve("summary"),
            lexicon_dir=resolve("lexicons"),
            template_path=resolve("templates"),
            single=stages.get("single", True),
            temporal=stages.get("temporal", True),
            paraphrase=stages.get("paraphrase", False),
            answer_based=stages.get("answer_based", False),
            backend=backend,
            seed=data.get("seed"),
            threshold=data.get("threshold", 0.25),
            paraphrase_k=data.get("paraphrase_k", 5),
            n_per_answer=data.get("n_per_answer", 3),
            workers=data.get("workers", 1),
        )
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class RunSummary:
    recipes: int
    records: int
    by_category: dict[str, int]
    skips: dict[str, int]
    augmentation: dict[str, dict[str, int]]
    diagnostics: tuple[str, ...]
    seconds: float
    output_path: Path

    def to_dict(self) -> dict:
        return {
            "recipes": self.recipes,
            "records": self.records,
            "by_category": self.by_category,
            "skips": self.skips,
            "augmentation": self.augmentation,
            "diagnostics": list(self.diagnostics),
            "seconds": round(self.seconds, 3),
            "output": str(self.output_path),
        }


@dataclass(frozen=True)
class _Draft:
    candidate: QaCandidate
    provenance: tuple[int, ...]
    answer_text: str | None


def _derive_seed(seed: int, recipe_id: str, sent_index: int) -> int:
    return (seed * 1000003
            + zlib.crc32(f"{recipe_id}.{sent_index}".encode())) & 0x7FFFFFFF


def _sentence_case(text: str) -> str:
    return text[:1].upper() + text[1:]


def _ensure_sentence(text: str) -> str:
    text = text.strip()
    return text if text[-1:] in ".?!" else text + "."


def _join_names(names: Sequence[str]) -> str:
    names = list(names) or ["nothing"]
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def _check_stage_inputs(config: PipelineConfig, client) -> None:
    if (config.single or config.temporal) and config.amr_path is None \
            and client is None:
        raise BackendRequiredButUnavailable(
            "sentence AMR acquisition needs a backend when no sidecar file"
            " is configured")
    if config.paraphrase and client is None:
        raise BackendRequiredButUnavailable(
            "the paraphrase stage needs a backend")
    if config.answer_based and client is None:
        raise BackendRequiredButUnavailable(
            "the answer-based stage needs a backend")


def _load_flows(config: PipelineConfig, docs) -> dict[str, FlowGraph]:
    if config.flow_dir is None:
        raise MissingFlowGraph(
            "temporal stage enabled but no flow graph directory is configured")
    flows = {}
    for doc in docs:
        path = config.flow_dir / f"{doc.id}.json"
        if not path.exists():
            raise MissingFlowGraph(f"no flow graph for recipe {doc.id!r} at {path}")
        flows[doc.id] = load_flowgraph(path)
    return flows


def _acquire_amrs(doc, sidecar, client, skips) -> dict[int, AmrGraph]:
    amrs = {i: g for i, g in sidecar.items() if 0 <= i < len(doc.steps)}
    for idx, step in enumerate(doc.steps):
        if idx in amrs:
            continue
        if client is None:
            skips["missing_amr"] += 1
            continue
        try:
            amrs[idx] = parse_penman(client.to_amr(step))
        except BackendError:
            skips["missing_amr"] += 1
        except AmrError:
            skips["amr_parse"] += 1
    return amrs


def _single_answer(candidate: QaCandidate, doc: RecipeDoc, idx: int) -> str | None:
    if candidate.answer_text is not None:
        return _ensure_sentence(candidate.answer_text)
    if candidate.category.startswith("instruction"):
        return doc.steps[idx]
    return None


def _generate(doc, config, client, lex, templates, sidecar, flow, skips):
    amrs = _acquire_amrs(doc, sidecar, client, skips)
    drafts: list[_Draft] = []
    if config.single:
        ordered = sorted(amrs)
        for idx in ordered:
            donors = [amrs[i] for i in ordered if i != idx]
            try:
                candidates = gen_all_single(
                    amrs[idx], lex, donor_pool=donors,
                    rng_seed=_derive_seed(config.seed, doc.id, idx),
                    sentence=doc.steps[idx])
            except QgenError:
                skips["qgen"] += 1
                continue
            drafts.extend(
                _Draft(c, (idx,), _single_answer(c, doc, idx))
                for c in candidates)
    if config.temporal:
        drafts.extend(_generate_temporal(doc, templates, amrs, flow, skips))
    # single categories sort ahead of temporal ones, so disabling a later
    # stage never renumbers records of an earlier one
    drafts.sort(key=lambda d: CATEGORIES.index(d.candidate.category))
    return drafts


def _generate_temporal(doc, templates, amrs, flow, skips):
    try:
        action_amrs = extract_action_amrs(flow, amrs)
    except MissingActionAmr:
        skips["temporal"] += 1
        return []
    mixture_names: dict[int, list[str]] = {}
    for ref in mixtures(flow):
        if ref.named:
            sent = flow.actions[ref.producing_act].sent_index
            mixture_names.setdefault(sent, ingredients_of(flow, ref))
    drafts = []
    for cand in gen_mixture_questions(flow, templates, sentence_amrs=amrs):
        names = mixture_names[cand.provenance[0]]
        answer = _ensure_sentence(_sentence_case(_join_names(names)))
        drafts.append(_Draft(cand, cand.provenance, answer))
    for cand in gen_next_prev_questions(flow, templates, action_amrs):
        drafts.append(_Draft(cand, cand.provenance, doc.steps[cand.provenance[-1]]))
    for cand in gen_order_questions(flow, templates, action_amrs):
        drafts.append(_Draft(cand, cand.provenance, None))
    return drafts


def _realize_question(candidate, client, skips) -> tuple[str, str]:
    if client is not None:
        try:
            text = client.to_text(serialize_penman(candidate.question_amr))
            if text.strip():
                return text, "neural"
        except BackendError:
            skips["realizer_fallback"] += 1
    return fallback_realizer(candidate), "fallback"


def _realize_answer(candidate, client, skips) -> str:
    graph = candidate.answer_amr
    if client is not None:
        try:
            text = client.to_text(serialize_penman(graph))
            if text.strip():
                return _ensure_sentence(text)
        except BackendError:
            skips["realizer_fallback"] += 1
    phrase = realize_phrase(graph)
    if candidate.category == "temporal_order":
        return _ensure_sentence(f"First, {phrase}")
    return _ensure_sentence(_sentence_case(phrase))


def _emit(doc, drafts, client, skips) -> list[dict]:
    context = " ".join(doc.steps)
    records = []
    for n, draft in enumerate(drafts, 1):
        cand = draft.candidate
        question, realizer = _realize_question(cand, client, skips)
        answer = draft.answer_text
        if answer is None:
            answer = _realize_answer(cand, client, skips)
        records.append({
            "qa_id": f"{doc.id}.q{n}",
            "recipe_id": doc.id,
            "question": question,
            "answer": answer,
            "category": cand.category,
            "question_amr": serialize_penman(cand.question_amr),
            "answer_amr": (serialize_penman(cand.answer_amr)
                           if cand.answer_amr is not None else None),
            "provenance": list(draft.provenance),
            "context": context,
            "realizer": realizer,
            "augmentation": None,
        })
    return records


def _augment_stats(outcome) -> dict[str, int]:
    verdicts = Counter(record.verdict for record in outcome.audit)
    return {
        "kept": verdicts.get("kept", 0),
        "dropped": verdicts.get("dropped", 0),
        "skipped": len(outcome.skipped),
    }


def run(config: PipelineConfig) -> RunSummary:
    """Build the dataset described by ``config`` and write it out.

    Stages run in a fixed order per recipe: AMR acquisition, single
    instruction generation, temporal generation, realization, then the
    augmentation flows over the whole dataset. Output order is recipe id,
    then question category, then generation order, so runs with the same
    config are byte-identical.
    """
    start = time.monotonic()
    docs = ingest(config.recipes_path)
    client = http_client(config.backend) if config.backend is not None else None
    _check_stage_inputs(config, client)
    docs_sorted = sorted(docs, key=lambda d: d.id)
    flows = _load_flows(config, docs_sorted) if config.temporal else {}
    lex = (RuleLexicons.load(config.lexicon_dir)
           if config.lexicon_dir is not None else RuleLexicons.default())
    templates = load_templates(config.template_path) if config.temporal else []
    sidecar = (load_sentence_amrs(config.amr_path)
               if config.amr_path is not None else {})

    def build(doc):
        local: Counter = Counter()
        drafts = _generate(doc, config, client, lex, templates,
                           sidecar.get(doc.id, {}), flows.get(doc.id), local)
        return _emit(doc, drafts, client, local), local

    if config.workers > 1 and len(docs_sorted) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            built = list(pool.map(build, docs_sorted))
    else:
        built = [build(doc) for doc in docs_sorted]

    skips: Counter = Counter()
    records: list[dict] = []
    for recipe_records, local in built:
        records.extend(recipe_records)
        skips.update(local)

    augmentation: dict[str, dict[str, int]] = {}
    if config.paraphrase:
        outcome = paraphrase_augment(records, client, k=config.paraphrase_k)
        augmentation["paraphrase"] = _augment_stats(outcome)
        records = list(outcome)
    if config.answer_based:
        outcome = answer_based_augment(
            records, client, n_per_answer=config.n_per_answer,
            threshold=config.threshold)
        augmentation["answer_based"] = _augment_stats(outcome)
        records = list(outcome)

    for record in records:
        DatasetRecord.from_dict(record)
    config.output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config.output_path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")

    by_category = Counter(record["category"] for record in records)
    summary = RunSummary(
        recipes=len(docs_sorted),
        records=len(records),
        by_category={c: by_category[c] for c in CATEGORIES if by_category[c]},
        skips=dict(skips),
        augmentation=augmentation,
        diagnostics=tuple(docs.diagnostics),
        seconds=time.monotonic() - start,
        output_path=config.output_path,
    )
    if config.summary_path is not None:
        config.summary_path.parent.mkdir(parents=True, exist_ok=True)
        config.summary_path.write_text(
            json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
    return summary


def _questions(path: str | Path) -> list[str]:
    questions = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        entry = json.loads(line)
        if not isinstance(entry, dict) or "question" not in entry:
            raise SchemaViolation(f"{path} line {lineno}: no question field")
        questions.append(entry["question"])
    return questions


def evaluate(generated_path, reference_path, scorer: str = "rouge1",
             out_path=None) -> dict:
    """Score a generated dataset against reference questions.

    Returns lexical diversity of the generated questions plus coverage of
    the reference set under the named scorer; optionally writes the
    report as JSON.
    """
    pair_scorer = get_scorer(scorer)
    generated = _questions(generated_path)
    reference = _questions(reference_path)
    report = {
        "diversity": diversity_report(generated).to_dict(),
        "coverage": coverage(reference, generated, pair_scorer).to_dict(),
    }
    if out_path is not None:
        Path(out_path).write_text(
            json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return report
