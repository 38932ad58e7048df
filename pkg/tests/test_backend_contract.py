"""Contract tests against the real shim server in shim/.

These spawn the compiled node process and exercise the wire protocol
end to end, so they only run when shim/dist exists (npm run build).
Everything else in the suite stays green without node.
"""
import re
import subprocess
import time
from pathlib import Path

import pytest
import requests

from recipeqg.amr import parse_penman
from recipeqg.augment import normalize_question, paraphrase_augment
from recipeqg.backends import BackendConfig, HttpBackendClient, ModelError

SHIM_ENTRY = Path(__file__).resolve().parents[1] / "shim" / "dist" / "index.js"

pytestmark = pytest.mark.skipif(
    not SHIM_ENTRY.exists(), reason="shim is not built (cd shim && npm run build)")

CHICKEN_SOUP_SENTENCE = ("Cook chicken and other ingredients in the pot over medium "
                 "heat for 20 minutes to prepare the soup")


@pytest.fixture(scope="module")
def shim():
    proc = subprocess.Popen(
        ["node", str(SHIM_ENTRY), "--port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
    try:
        deadline = time.monotonic() + 10
        line = ""
        while time.monotonic() < deadline:
            line = proc.stdout.readline()
            if "listening on" in line or not line:
                break
        match = re.search(r"listening on (http://[0-9.]+:\d+)", line)
        if not match:
            raise RuntimeError(f"shim did not start: {line!r}")
        yield match.group(1)
    finally:
        proc.terminate()
        proc.wait(timeout=5)


@pytest.fixture(scope="module")
def client(shim):
    return HttpBackendClient(BackendConfig(endpoint=shim, max_retries=0))


def test_health_reports_enabled_models(client):
    body = client.health()
    assert body["status"] == "ok"
    assert len(body["models"]) == 5
    assert all(isinstance(m, str) and m for m in body["models"])


def test_parse_smoke_root_concept(client):
    graph = parse_penman(client.to_amr(CHICKEN_SOUP_SENTENCE))
    assert graph.concept(graph.root) == "cook-01"


def test_generate_realizes_unknown_as_question(client):
    text = client.to_text(
        "(a / add-02 :mode imperative :ARG0 (y / you)"
        " :ARG1 (u / amr-unknown) :ARG2 (p / pan))")
    assert "what" in text.lower()
    assert text.endswith("?")


def test_paraphrase_returns_bounded_distinct_rewrites(client):
    question = "What do you add to the pan?"
    texts = client.paraphrase(question, 5)
    assert 0 < len(texts) <= 5
    keys = {normalize_question(t) for t in texts}
    assert len(keys) == len(texts)
    assert normalize_question(question) not in keys


def test_qg_and_answer_endpoints(client):
    context = "Add the oil to the pan. Cook the soup for 20 minutes."
    questions = client.questions_for_answer(context, "20 minutes", 3)
    assert 0 < len(questions) <= 3
    assert all(q.endswith("?") for q in questions)
    answer = client.answer_question(context, "How long do you cook the soup?")
    assert answer == "Cook the soup for 20 minutes."


def test_error_codes_match_the_wire_protocol(shim, client):
    with pytest.raises(ModelError, match="empty"):
        client.to_amr("")
    with pytest.raises(ModelError, match="PENMAN"):
        client.to_text("(broken")

    missing_field = requests.post(f"{shim}/v1/parse", json={"penman": "x"})
    assert missing_field.status_code == 422
    assert "error" in missing_field.json()

    oversized = requests.post(f"{shim}/v1/parse",
                              json={"text": "x" * (300 * 1024)})
    assert oversized.status_code == 413

    off_route = requests.post(f"{shim}/v1/nope", json={})
    assert off_route.status_code == 404
    assert "error" in off_route.json()


def _question_records(n):
    records = []
    for index in range(n):
        records.append({
            "qa_id": f"r1.q{index + 1}",
            "recipe_id": "r1",
            "question": f"What do you add to the pan in step {index + 1}?",
            "answer": "The oil.",
            "category": "role_specific",
            "question_amr": "(a / add-02 :ARG1 (u / amr-unknown))",
            "answer_amr": "(o / oil)",
            "provenance": [index],
            "context": "Add the oil to the pan.",
            "realizer": "fallback",
            "augmentation": None,
        })
    return records


def test_paraphrase_flow_through_the_shim(client):
    originals = _question_records(10)
    outcome = paraphrase_augment(originals, client, k=5)
    assert len(outcome) <= 60
    keys = [normalize_question(r["question"]) for r in outcome]
    assert len(set(keys)) == len(keys)
    assert [r for r in outcome if r["augmentation"] is None] == originals
    assert not outcome.skipped
