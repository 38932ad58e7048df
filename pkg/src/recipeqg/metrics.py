"""Intrinsic evaluation: corpus diversity, reference coverage, and the
lexical pair scorers used by filtering and evaluation.

Dist-n is a corpus-level ratio: distinct n-grams over total n-grams,
counted across the whole question list.  The n-gram diversity score is
the plain mean of Dist-1 through Dist-5.  Coverage is the mean over
reference questions of the best pairwise score against the generated
set, with the full per-reference table kept for inspection.

Everything here is pure string work on the package tokenizer, so the
numbers are reproducible bit for bit across runs and platforms.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable

_TOKEN = re.compile(r"\w+|[^\w\s]")


class EmptyReference(Exception):
    pass


class EmptyGenerated(Exception):
    pass


class UnknownScorer(Exception):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase and split into word tokens and single punctuation marks."""
    return _TOKEN.findall(text.lower())


def _ngrams(tokens: list[str], n: int):
    for i in range(len(tokens) - n + 1):
        yield tuple(tokens[i:i + n])


def dist_n(questions: list[str], n: int) -> float:
    """Distinct over total n-grams across the corpus; 0.0 when empty."""
    if not 1 <= n <= 5:
        raise ValueError(f"n must be between 1 and 5, got {n}")
    total = 0
    distinct: set[tuple[str, ...]] = set()
    for question in questions:
        for gram in _ngrams(tokenize(question), n):
            total += 1
            distinct.add(gram)
    if total == 0:
        return 0.0
    return len(distinct) / total


def ngram_diversity(questions: list[str]) -> float:
    """Mean of dist_n for n = 1..5."""
    return sum(dist_n(questions, n) for n in range(1, 6)) / 5


@dataclass(frozen=True)
class DiversityReport:
    dist: dict[int, float]
    ngram_diversity: float
    question_count: int
    token_count: int

    def to_dict(self) -> dict:
        return {
            "dist": {str(n): v for n, v in sorted(self.dist.items())},
            "ngram_diversity": self.ngram_diversity,
            "question_count": self.question_count,
            "token_count": self.token_count,
        }


def diversity_report(questions: list[str]) -> DiversityReport:
    dist = {n: dist_n(questions, n) for n in range(1, 6)}
    return DiversityReport(
        dist=dist,
        ngram_diversity=sum(dist.values()) / 5,
        question_count=len(questions),
        token_count=sum(len(tokenize(q)) for q in questions),
    )


def rouge1_parts(a: str, b: str) -> tuple[float, float, float]:
    """Unigram overlap (precision, recall, F1) with clipped counts.

    Precision is measured over ``b``'s tokens, recall over ``a``'s, so
    call as rouge1_parts(reference, candidate).
    """
    at, bt = tokenize(a), tokenize(b)
    if not at or not bt:
        return 0.0, 0.0, 0.0
    counts = Counter(bt)
    overlap = 0
    for token in at:
        if counts[token] > 0:
            counts[token] -= 1
            overlap += 1
    if overlap == 0:
        return 0.0, 0.0, 0.0
    precision = overlap / len(bt)
    recall = overlap / len(at)
    return precision, recall, 2 * precision * recall / (precision + recall)


def rouge1(a: str, b: str) -> float:
    """Unigram overlap F1 with clipped counts."""
    return rouge1_parts(a, b)[2]


def token_f1(a: str, b: str) -> float:
    """Bag-of-tokens F1, implemented independently of rouge1."""
    at, bt = Counter(tokenize(a)), Counter(tokenize(b))
    overlap = sum((at & bt).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(bt.values())
    recall = overlap / sum(at.values())
    return 2 * precision * recall / (precision + recall)


def rouge_l(a: str, b: str) -> float:
    """Longest-common-subsequence F-measure with equal weighting."""
    at, bt = tokenize(a), tokenize(b)
    if not at or not bt:
        return 0.0
    previous = [0] * (len(bt) + 1)
    for tok_a in at:
        current = [0]
        for j, tok_b in enumerate(bt):
            if tok_a == tok_b:
                current.append(previous[j] + 1)
            else:
                current.append(max(previous[j + 1], current[j]))
        previous = current
    lcs = previous[-1]
    if lcs == 0:
        return 0.0
    precision = lcs / len(bt)
    recall = lcs / len(at)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class PairScorer:
    """A named pairwise scoring function with its declared behavior."""

    name: str
    score: Callable[[str, str], float]
    range: tuple[float, float] = (0.0, 1.0)
    symmetric: bool = True


def _exact(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


SCORERS: dict[str, PairScorer] = {
    "exact": PairScorer("exact", _exact),
    "rouge1": PairScorer("rouge1", rouge1),
    "rougeL": PairScorer("rougeL", rouge_l),
    "tokenF1": PairScorer("tokenF1", token_f1),
}


def get_scorer(name: str) -> PairScorer:
    try:
        return SCORERS[name]
    except KeyError:
        raise UnknownScorer(f"no scorer named {name!r}; available: {', '.join(sorted(SCORERS))}") from None


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    per_reference: list[tuple[str, str, float]]
    scorer: str
    n_reference: int
    n_generated: int

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "per_reference": [
                {"reference": ref, "best": best, "score": score}
                for ref, best, score in self.per_reference
            ],
            "scorer": self.scorer,
            "n_reference": self.n_reference,
            "n_generated": self.n_generated,
        }


def coverage(reference: list[str], generated: list[str], scorer: PairScorer) -> CoverageReport:
    """Mean over references of the best pairwise score in the generated set."""
    if not reference:
        raise EmptyReference("reference set is empty")
    if not generated:
        raise EmptyGenerated("generated set is empty")
    table: list[tuple[str, str, float]] = []
    for ref in reference:
        best_question = generated[0]
        best_score = scorer.score(ref, generated[0])
        for gen in generated[1:]:
            value = scorer.score(ref, gen)
            if value > best_score:
                best_question, best_score = gen, value
        table.append((ref, best_question, best_score))
    mean = sum(score for _, _, score in table) / len(table)
    return CoverageReport(
        coverage=mean,
        per_reference=table,
        scorer=scorer.name,
        n_reference=len(reference),
        n_generated=len(generated),
    )
