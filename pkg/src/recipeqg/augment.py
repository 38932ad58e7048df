"""Backend-driven dataset growth: paraphrases and answer-seeded questions.

Both flows operate on dataset records in their JSONL dict form, append
new records after the originals, and attach a per-record audit entry.
Originals are never removed or altered; a flaky backend only lowers
the yield.
"""
from __future__ import annotations

import re
from dataclasses import asdict, dataclass

from .backends import BackendError, round_trip_filter

METHODS = ("paraphrase", "answer_based")
VERDICTS = ("kept", "dropped")

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class AugmentationRecord:
    """Audit entry for one produced question, kept or not.

    score is the round-trip filter score, present on filter verdicts;
    duplicate-dropped paraphrases carry None.
    """

    source_qa_id: str
    method: str
    produced: str
    verdict: str
    score: float | None
    backend: str

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")


class AugmentOutcome(list):
    """The augmented dataset, with the production audit attached.

    The list itself is the new dataset (originals in input order, each
    followed by its kept additions).  audit holds one
    AugmentationRecord per produced question; skipped holds
    (qa_id, reason) for backend failures.
    """

    def __init__(self, records=(), audit=(), skipped=()):
        super().__init__(records)
        self.audit = list(audit)
        self.skipped = list(skipped)


def normalize_question(text: str) -> str:
    """Dedup key: case-folded, whitespace-collapsed, no terminal punctuation."""
    out = _WS.sub(" ", text.casefold()).strip()
    return out.rstrip(".?!").rstrip()


def _backend_identity(client) -> str:
    endpoint = getattr(getattr(client, "config", None), "endpoint", None)
    return str(endpoint) if endpoint else type(client).__name__


def _spawn(source: dict, qa_id: str, question: str,
           audit: AugmentationRecord) -> dict:
    out = dict(source)
    out["qa_id"] = qa_id
    out["question"] = question
    out["provenance"] = list(source.get("provenance", ()))
    out["realizer"] = "neural"
    out["augmentation"] = asdict(audit)
    return out


def paraphrase_augment(dataset, client, k: int = 5) -> AugmentOutcome:
    """Append up to k backend paraphrases of every question.

    Paraphrases that normalize to an already-seen question (any
    original, or anything kept earlier) are dropped as duplicates.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    backend = _backend_identity(client)
    seen = {normalize_question(r["question"]) for r in dataset}
    records, audit, skipped = [], [], []
    for source in dataset:
        records.append(source)
        qa_id = source["qa_id"]
        try:
            texts = client.paraphrase(source["question"], k)
        except BackendError as exc:
            skipped.append((qa_id, str(exc)))
            continue
        for index, text in enumerate(texts, start=1):
            key = normalize_question(text)
            if key in seen:
                entry = AugmentationRecord(qa_id, "paraphrase", text,
                                           "dropped", None, backend)
                audit.append(entry)
                continue
            seen.add(key)
            entry = AugmentationRecord(qa_id, "paraphrase", text,
                                       "kept", None, backend)
            audit.append(entry)
            records.append(_spawn(source, f"{qa_id}-para{index}", text, entry))
    return AugmentOutcome(records, audit, skipped)


def answer_based_augment(dataset, client, n_per_answer: int = 3,
                         threshold: float = 0.25) -> AugmentOutcome:
    """Append backend questions seeded by each answer, round-trip filtered.

    Generated questions survive only when answering them back from the
    record's context overlaps the original answer (ROUGE-1 strictly
    above the threshold).
    """
    if n_per_answer < 0:
        raise ValueError("n_per_answer must be >= 0")
    if n_per_answer == 0:
        return AugmentOutcome(list(dataset))
    backend = _backend_identity(client)
    records, audit, skipped = [], [], []
    for source in dataset:
        records.append(source)
        qa_id = source["qa_id"]
        context = source.get("context")
        answer = source.get("answer")
        if not context or not answer:
            raise ValueError(f"record {qa_id!r} needs answer text and context")
        try:
            questions = client.questions_for_answer(context, answer, n_per_answer)
        except BackendError as exc:
            skipped.append((qa_id, str(exc)))
            continue
        outcome = round_trip_filter([(q, answer, context) for q in questions],
                                    client, threshold=threshold)
        verdicts = {pair[0]: ("kept", None) for pair in outcome.kept}
        verdicts.update((pair[0], ("dropped", score))
                        for pair, score in outcome.dropped)
        for pair, reason in outcome.skipped:
            skipped.append((qa_id, f"{pair[0]}: {reason}"))
        for index, question in enumerate(questions, start=1):
            if question not in verdicts:
                continue
            verdict, score = verdicts[question]
            entry = AugmentationRecord(qa_id, "answer_based", question,
                                       verdict, score, backend)
            audit.append(entry)
            if verdict == "kept":
                records.append(_spawn(source, f"{qa_id}-ans{index}",
                                      question, entry))
    return AugmentOutcome(records, audit, skipped)
