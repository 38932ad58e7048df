from __future__ import annotations

import copy

import pytest

from recipeqg.augment import (
    AugmentationRecord,
    answer_based_augment,
    normalize_question,
    paraphrase_augment,
)
from recipeqg.backends import ModelError, Transport


class ScriptedClient:
    """Table-driven fake; an Exception value is raised when looked up."""

    def __init__(self, paraphrases=None, questions=None, answers=None):
        self.paraphrases = paraphrases or {}
        self.questions = questions or {}
        self.answers = answers or {}
        self.calls = []

    @staticmethod
    def _lookup(table, key):
        result = table[key]
        if isinstance(result, Exception):
            raise result
        return result

    def paraphrase(self, text, n):
        self.calls.append(("paraphrase", text, n))
        return self._lookup(self.paraphrases, text)[:n]

    def questions_for_answer(self, context, answer, n):
        self.calls.append(("questions_for_answer", answer, n))
        return self._lookup(self.questions, answer)[:n]

    def answer_question(self, context, question):
        self.calls.append(("answer_question", question))
        return self._lookup(self.answers, question)


def record(qa_id="r1.q1", question="What is in the soup?", answer="Chicken.",
           **over):
    base = {
        "qa_id": qa_id,
        "recipe_id": "r1",
        "question": question,
        "answer": answer,
        "category": "role_specific",
        "question_amr": "(a / amr-unknown)",
        "answer_amr": "(c / chicken)",
        "provenance": [0],
        "augmentation": None,
        "realizer": "fallback",
        "context": "Cook chicken in the pot.",
    }
    base.update(over)
    return base


# --- normalization ---

def test_normalize_question():
    assert normalize_question("What is in the soup?") == "what is in the soup"
    assert normalize_question("  What   IS\tin the\nsoup  ") == "what is in the soup"
    assert normalize_question("Really?!") == "really"
    assert normalize_question("First, add oil; then stir.") == "first, add oil; then stir"
    assert normalize_question("Stir... ") == "stir"


def test_augmentation_record_validation():
    AugmentationRecord("q1", "paraphrase", "x", "kept", None, "stub")
    AugmentationRecord("q1", "answer_based", "x", "dropped", 0.1, "stub")
    with pytest.raises(ValueError):
        AugmentationRecord("q1", "diffusion", "x", "kept", None, "stub")
    with pytest.raises(ValueError):
        AugmentationRecord("q1", "paraphrase", "x", "maybe", None, "stub")


# --- paraphrasing ---

def test_paraphrase_appends_in_order():
    texts = [f"Soup variant {i}?" for i in range(1, 6)]
    client = ScriptedClient(paraphrases={"What is in the soup?": texts})
    dataset = [record()]
    out = paraphrase_augment(dataset, client, k=5)
    assert len(out) == 6
    assert out[0] is dataset[0]
    assert [r["question"] for r in out[1:]] == texts
    assert [r["qa_id"] for r in out[1:]] == [f"r1.q1-para{i}" for i in range(1, 6)]
    for r in out[1:]:
        assert r["answer"] == "Chicken."
        assert r["question_amr"] == "(a / amr-unknown)"
        assert r["realizer"] == "neural"
        audit = r["augmentation"]
        assert audit["method"] == "paraphrase"
        assert audit["verdict"] == "kept"
        assert audit["source_qa_id"] == "r1.q1"
    assert client.calls == [("paraphrase", "What is in the soup?", 5)]


def test_paraphrase_echo_collapses_to_original():
    client = ScriptedClient(
        paraphrases={"What is in the soup?": ["what is in the soup"]})
    out = paraphrase_augment([record()], client, k=1)
    assert len(out) == 1
    assert out.audit == [AugmentationRecord(
        "r1.q1", "paraphrase", "what is in the soup", "dropped", None,
        "ScriptedClient")]


def test_paraphrase_dedups_across_records():
    first = record(qa_id="r1.q1", question="Where do we cook?")
    second = record(qa_id="r1.q2", question="What is in the soup?")
    client = ScriptedClient(paraphrases={
        "Where do we cook?": ["What is in the soup?", "Where is it cooked?"],
        "What is in the soup?": ["Where is it cooked?"],
    })
    out = paraphrase_augment([first, second], client, k=2)
    questions = [r["question"] for r in out]
    # r1.q1's first paraphrase duplicates r1.q2; r1.q2's duplicates an
    # already-kept paraphrase of r1.q1
    assert questions == ["Where do we cook?", "Where is it cooked?",
                         "What is in the soup?"]
    assert out[1]["qa_id"] == "r1.q1-para2"
    verdicts = [(a.source_qa_id, a.verdict) for a in out.audit]
    assert verdicts == [("r1.q1", "dropped"), ("r1.q1", "kept"),
                        ("r1.q2", "dropped")]


def test_paraphrase_never_mutates_originals():
    dataset = [record(), record(qa_id="r1.q2", question="Where?")]
    snapshot = copy.deepcopy(dataset)
    client = ScriptedClient(paraphrases={
        "What is in the soup?": ["In the soup, what is there?"],
        "Where?": [],
    })
    out = paraphrase_augment(dataset, client, k=3)
    assert dataset == snapshot
    assert [r["qa_id"] for r in out] == ["r1.q1", "r1.q1-para1", "r1.q2"]
    assert len(out) <= len(dataset) * (3 + 1)


def test_paraphrase_skips_failing_questions():
    ok = record(qa_id="r1.q1", question="Where do we cook?")
    bad = record(qa_id="r1.q2", question="What is in the soup?")
    client = ScriptedClient(paraphrases={
        "Where do we cook?": ["In what place do we cook?"],
        "What is in the soup?": Transport("backend down"),
    })
    out = paraphrase_augment([ok, bad], client, k=2)
    assert [r["qa_id"] for r in out] == ["r1.q1", "r1.q1-para1", "r1.q2"]
    assert out.skipped == [("r1.q2", "backend down")]


def test_paraphrase_rejects_bad_k():
    with pytest.raises(ValueError):
        paraphrase_augment([record()], ScriptedClient(), k=0)


# --- answer-based generation ---

def test_answer_based_appends_survivors():
    generated = ["What meat goes in?", "How long do we cook?", "What is added?"]
    client = ScriptedClient(
        questions={"Chicken.": generated},
        answers={
            "What meat goes in?": "chicken",
            "How long do we cook?": "twenty minutes",
            "What is added?": "the chicken",
        })
    out = answer_based_augment([record()], client, n_per_answer=3)
    assert [r["qa_id"] for r in out] == ["r1.q1", "r1.q1-ans1", "r1.q1-ans3"]
    assert out[1]["question"] == "What meat goes in?"
    assert out[2]["question"] == "What is added?"
    for r in out[1:]:
        assert r["answer"] == "Chicken."
        assert r["augmentation"]["method"] == "answer_based"
        assert r["augmentation"]["verdict"] == "kept"
    dropped = [a for a in out.audit if a.verdict == "dropped"]
    assert len(dropped) == 1
    assert dropped[0].produced == "How long do we cook?"
    assert dropped[0].score == 0.0


def test_answer_based_threshold_drops_everything():
    client = ScriptedClient(
        questions={"Chicken.": ["Q1?", "Q2?"]},
        answers={"Q1?": "unrelated words", "Q2?": "also nothing shared"})
    out = answer_based_augment([record()], client, n_per_answer=2)
    assert [r["qa_id"] for r in out] == ["r1.q1"]
    assert all(a.verdict == "dropped" for a in out.audit)
    assert all(a.score == 0.0 for a in out.audit)


def test_answer_based_zero_is_identity():
    dataset = [record()]
    out = answer_based_augment(dataset, ScriptedClient(), n_per_answer=0)
    assert list(out) == dataset
    assert out.audit == [] and out.skipped == []


def test_answer_based_skips_failing_answers():
    ok = record(qa_id="r1.q1", answer="Chicken.")
    bad = record(qa_id="r1.q2", answer="Salt.")
    client = ScriptedClient(
        questions={"Chicken.": ["What meat goes in?"], "Salt.": ModelError("nope")},
        answers={"What meat goes in?": "chicken"})
    out = answer_based_augment([ok, bad], client, n_per_answer=1)
    assert [r["qa_id"] for r in out] == ["r1.q1", "r1.q1-ans1", "r1.q2"]
    assert out.skipped == [("r1.q2", "nope")]


def test_answer_based_round_trip_failure_skips_that_question():
    client = ScriptedClient(
        questions={"Chicken.": ["Good?", "Broken?"]},
        answers={"Good?": "chicken", "Broken?": Transport("flaky")})
    out = answer_based_augment([record()], client, n_per_answer=2)
    assert [r["qa_id"] for r in out] == ["r1.q1", "r1.q1-ans1"]
    assert len(out.skipped) == 1
    assert out.skipped[0][0] == "r1.q1"
    assert "flaky" in out.skipped[0][1]


def test_answer_based_requires_context():
    broken = record()
    del broken["context"]
    with pytest.raises(ValueError, match="context"):
        answer_based_augment([broken], ScriptedClient(), n_per_answer=1)


def test_augment_runs_are_deterministic():
    client = ScriptedClient(paraphrases={
        "What is in the soup?": ["Variant A?", "Variant B?"]})
    first = paraphrase_augment([record()], client, k=2)
    second = paraphrase_augment([record()], client, k=2)
    assert list(first) == list(second)
    assert first.audit == second.audit
