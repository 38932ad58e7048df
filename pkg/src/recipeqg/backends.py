"""Model backend access plus offline stand-ins.

An HTTP client speaks the wire protocol (parse, generate, paraphrase,
question-from-answer, answer) with bounded concurrency and retries.
When no backend is reachable, fallback_realizer turns question graphs
into flat but deterministic English so the whole pipeline still runs.
round_trip_filter implements answer-consistency filtering on top of
any client.
"""
from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources

import requests

from .amr import AmrGraph, Const, Edge, Var
from .metrics import rouge1_parts
from .qgen_temporal import PARTICIPLE_FRAMES


class BackendError(Exception):
    """Base for everything a backend call can raise."""


class Timeout(BackendError):
    """No response within the configured window."""


class Transport(BackendError):
    """Connection failure or 5xx: the model never saw the request."""


class ModelError(BackendError):
    """The model rejected this input (wire status 422)."""


class ProtocolViolation(BackendError):
    """The response does not match the wire contract."""


class UnknownCategory(Exception):
    """fallback_realizer has no skeleton for this candidate category."""


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str
    timeout_ms: int = 30000
    max_retries: int = 2
    max_in_flight: int = 4
    api_key_env: str | None = None

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class HttpBackendClient:
    """Synchronous wire-protocol client, shareable across threads.

    Transport-class failures (connection errors, timeouts, 5xx) are
    retried with exponential backoff; model errors are not, since the
    same input would fail again.
    """

    def __init__(self, config: BackendConfig):
        self.config = config
        self._session = requests.Session()
        self._slots = threading.BoundedSemaphore(config.max_in_flight)

    def _request(self, method: str, path: str, payload=None):
        url = self.config.endpoint.rstrip("/") + path
        headers = {}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        timeout = self.config.timeout_ms / 1000.0
        last: BackendError = Transport(f"{path}: no attempt made")
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(0.05 * 2 ** (attempt - 1))
            try:
                with self._slots:
                    response = self._session.request(
                        method, url, json=payload, headers=headers,
                        timeout=timeout)
            except requests.Timeout:
                last = Timeout(f"{path}: no response within {timeout:g}s")
                continue
            except requests.RequestException as exc:
                last = Transport(f"{path}: {exc}")
                continue
            if response.status_code >= 500:
                last = Transport(f"{path}: server returned {response.status_code}")
                continue
            return response
        raise last

    def _call(self, path: str, payload: dict, key: str):
        response = self._request("POST", path, payload)
        try:
            body = response.json()
        except ValueError:
            raise ProtocolViolation(f"{path}: response body is not JSON") from None
        if response.status_code == 422:
            message = body.get("error") if isinstance(body, dict) else None
            raise ModelError(str(message or f"{path}: unspecified model error"))
        if response.status_code != 200:
            raise ProtocolViolation(f"{path}: unexpected status {response.status_code}")
        if not isinstance(body, dict) or key not in body:
            raise ProtocolViolation(f"{path}: response lacks {key!r}")
        return body[key]

    def _strings(self, value, path: str) -> list[str]:
        if not isinstance(value, list):
            raise ProtocolViolation(f"{path}: expected a list of strings")
        return [str(x) for x in value]

    def to_amr(self, text: str) -> str:
        return str(self._call("/v1/parse", {"text": text}, "penman"))

    def to_text(self, penman: str) -> str:
        return str(self._call("/v1/generate", {"penman": penman}, "text"))

    def paraphrase(self, text: str, n: int) -> list[str]:
        if n <= 0:
            return []
        out = self._call("/v1/paraphrase", {"text": text, "n": int(n)}, "texts")
        return self._strings(out, "/v1/paraphrase")

    def questions_for_answer(self, context: str, answer: str, n: int) -> list[str]:
        if n <= 0:
            return []
        payload = {"context": context, "answer": answer, "n": int(n)}
        out = self._call("/v1/qg_from_answer", payload, "questions")
        return self._strings(out, "/v1/qg_from_answer")

    def answer_question(self, context: str, question: str) -> str:
        payload = {"context": context, "question": question}
        return str(self._call("/v1/answer", payload, "answer"))

    def health(self) -> dict:
        response = self._request("GET", "/v1/health")
        try:
            body = response.json()
        except ValueError:
            raise ProtocolViolation("/v1/health: response body is not JSON") from None
        if response.status_code != 200 or not isinstance(body, dict):
            raise ProtocolViolation(f"/v1/health: unexpected status {response.status_code}")
        return body


def http_client(config: BackendConfig) -> HttpBackendClient:
    return HttpBackendClient(config)


def load_prompt(name: str) -> str:
    """Verbatim prompt template shipped with the package, by stem name."""
    path = resources.files("recipeqg") / "data" / "prompts" / f"{name}.txt"
    return path.read_text(encoding="utf-8").rstrip("\n")


# --- offline realization ---

_FRAME = re.compile(r"-\d+$")
_OP_ROLE = re.compile(r"^:op\d+$")
_PRONOUNS = {"i": "I", "we": "we", "you": "you"}
_PARTICIPLES = {frame: word for word, frame in PARTICIPLE_FRAMES.items()}
_VOWELS = "aeiou"
# prepositions prefixing non-:ARG1 arguments inside an action phrase
_ACTION_TAILS = {":ARG2": "to", ":location": "in",
                 ":accompanier": "with", ":instrument": "with"}
# concepts that belong to mixture question scaffolding, never to the name
_MIXTURE_SCAFFOLD = frozenset({
    "ingredient", "prepare-01", "require-01", "need-01", "make-01",
    "go-02", "i", "amr-unknown",
})


def _lemma(concept: str) -> str:
    return _FRAME.sub("", concept)


def _is_frame(concept: str) -> bool:
    return bool(_FRAME.search(concept))


def _participle(frame: str) -> str:
    word = _PARTICIPLES.get(frame)
    if word:
        return word
    lemma = _lemma(frame)
    if lemma.endswith("e"):
        return lemma + "d"
    single = len(re.findall(r"[aeiou]+", lemma)) == 1
    if (single and len(lemma) >= 3 and lemma[-1] not in _VOWELS + "wxy"
            and lemma[-2] in _VOWELS and lemma[-3] not in _VOWELS):
        return lemma + lemma[-1] + "ed"
    return lemma + "ed"


def _is_unknown(graph: AmrGraph, target) -> bool:
    return isinstance(target, Var) and "amr-unknown" in graph.nodes[target.name]


def _join(parts: list[str]) -> str:
    if len(parts) <= 1:
        return "".join(parts)
    return ", ".join(parts[:-1]) + " and " + parts[-1]


def _target_phrase(graph: AmrGraph, target, article: bool = True) -> str:
    if isinstance(target, Const):
        return target.token
    if _is_frame(graph.concept(target.name)):
        return _action_phrase(graph, target.name)
    return _entity(graph, target.name, article=article)


def _entity(graph: AmrGraph, var: str, article: bool = True) -> str:
    concepts = graph.nodes[var]
    if "and" in concepts:
        ops = sorted((e for e in graph.out_edges(var) if _OP_ROLE.match(e.role)),
                     key=lambda e: int(e.role[3:]))
        return _join([_target_phrase(graph, e.target, article) for e in ops])
    head = concepts[0]
    if head in _PRONOUNS:
        return _PRONOUNS[head]
    quant = None
    words = []
    for e in graph.out_edges(var):
        if e.role == ":quant" and isinstance(e.target, Const) and quant is None:
            quant = e.target.token
        elif e.role == ":mod":
            if isinstance(e.target, Const):
                words.append(e.target.token)
            elif e.target.name != var and not _is_unknown(graph, e.target):
                words.append(_lemma(graph.concept(e.target.name)))
        elif e.role == ":ARG1-of" and isinstance(e.target, Var):
            frame = graph.concept(e.target.name)
            if _is_frame(frame):
                words.append(_participle(frame))
    if head.endswith("-quantity"):
        unit = next((e.target for e in graph.out_edges(var)
                     if e.role in (":unit", ":scale") and isinstance(e.target, Var)),
                    None)
        noun = _lemma(graph.concept(unit.name)) if unit else head[:-len("-quantity")]
        return f"{quant} {noun}" if quant is not None else noun
    bare = " ".join(words + [_lemma(head)])
    if quant is not None:
        return f"{quant} {bare}"
    if article and not head[:1].isdigit():
        return f"the {bare}"
    return bare


def _action_phrase(graph: AmrGraph, var: str) -> str:
    out = _lemma(graph.concept(var))
    obj = None
    tails = []
    for e in graph.out_edges(var):
        if e.role == ":ARG1" and obj is None and not _is_unknown(graph, e.target):
            obj = _target_phrase(graph, e.target)
        elif e.role in _ACTION_TAILS and not _is_unknown(graph, e.target):
            tails.append(f" {_ACTION_TAILS[e.role]} {_target_phrase(graph, e.target)}")
    if obj:
        out += f" {obj}"
    return out + "".join(tails)


def realize_phrase(graph: AmrGraph) -> str:
    """Deterministic reading of a standalone graph, action or entity."""
    if _is_frame(graph.concept(graph.root)):
        return _action_phrase(graph, graph.root)
    return _entity(graph, graph.root)


def _subject(graph: AmrGraph) -> str:
    for e in graph.top_edges(":ARG0"):
        if isinstance(e.target, Var):
            concept = graph.concept(e.target.name)
            return _PRONOUNS.get(concept, _lemma(concept))
    return "we"


def _unknown_edge(graph: AmrGraph) -> Edge | None:
    for e in graph.edges:
        if _is_unknown(graph, e.target):
            return e
    return None


def _object_tail(graph: AmrGraph) -> str:
    for e in graph.top_edges(":ARG1"):
        if not _is_unknown(graph, e.target):
            return " " + _target_phrase(graph, e.target)
    return ""


def _role_specific(graph: AmrGraph) -> str:
    edge = _unknown_edge(graph)
    subj = _subject(graph)
    verb = _lemma(graph.concept(graph.root))
    if edge is None:
        return f"What do {subj} {verb}?"
    role, parent = edge.role, edge.source
    if role in (":ARG1", ":ARG2"):
        other = ":ARG2" if role == ":ARG1" else ":ARG1"
        tail = ""
        for e in graph.top_edges(other):
            if not _is_unknown(graph, e.target):
                tail = f" with {_target_phrase(graph, e.target)}"
                break
        return f"What do {subj} {verb}{tail}?"
    if role == ":time":
        return f"When do {subj} {verb}{_object_tail(graph)}?"
    if role in (":duration", ":extent"):
        return f"How long do {subj} {verb}{_object_tail(graph)}?"
    if role == ":location":
        return f"Where do {subj} {verb}{_object_tail(graph)}?"
    if role == ":instrument":
        return f"What do {subj} use to {verb}{_object_tail(graph)}?"
    if role == ":purpose":
        return f"Why do {subj} {verb}{_object_tail(graph)}?"
    if role == ":accompanier":
        return f"What do {subj} {verb}{_object_tail(graph)} with?"
    if role == ":degree":
        return f"To what degree do {subj} {verb}{_object_tail(graph)}?"
    if role == ":mod":
        noun = _entity(graph, parent, article=False)
        if parent != graph.root and _is_frame(graph.concept(graph.root)):
            return f"What kind of {noun} do {subj} {verb}?"
        return f"What kind of {noun}?"
    if role == ":quant":
        head = graph.concept(parent)
        if head.endswith("-quantity"):
            unit = next((e.target for e in graph.out_edges(parent)
                         if e.role in (":unit", ":scale") and isinstance(e.target, Var)),
                        None)
            noun = _lemma(graph.concept(unit.name)) if unit else head[:-len("-quantity")]
            return f"How many {noun} do {subj} {verb}?"
        return f"How much {_entity(graph, parent, article=False)} do {subj} {verb}?"
    if role in (":domain", ":value"):
        return f"What is {_entity(graph, parent)}?"
    return f"What is the {_lemma(graph.concept(parent))}?"


def _instruction_how(graph: AmrGraph) -> str:
    return f"How do {_subject(graph)} {_lemma(graph.concept(graph.root))}{_object_tail(graph)}?"


def _instruction_what_with(graph: AmrGraph) -> str:
    for e in graph.top_edges(":ARG2"):
        return f"What do {_subject(graph)} do with {_target_phrase(graph, e.target)}?"
    return f"What do {_subject(graph)} do?"


def _polarity(graph: AmrGraph) -> str:
    return f"Do {_subject(graph)} {_action_phrase(graph, graph.root)}?"


def _mixture_name(graph: AmrGraph, var: str, seen: set) -> str | None:
    if graph.concept(var) not in _MIXTURE_SCAFFOLD and "amr-unknown" not in graph.nodes[var]:
        return var
    for e in graph.out_edges(var):
        if isinstance(e.target, Var) and e.target.name not in seen:
            seen.add(e.target.name)
            found = _mixture_name(graph, e.target.name, seen)
            if found is not None:
                return found
    return None


def _temporal_mixture(graph: AmrGraph) -> str:
    name = _mixture_name(graph, graph.root, {graph.root})
    if name is None:
        return "What do we need?"
    return f"What do we need for {_entity(graph, name)}?"


def _temporal_next_prev(graph: AmrGraph) -> str:
    for e in graph.top_edges(":time"):
        if not isinstance(e.target, Var):
            continue
        anchor = graph.concept(e.target.name)
        if anchor == "next":
            return "What will we do next?"
        for op in graph.out_edges(e.target.name):
            if op.role == ":op1" and isinstance(op.target, Var):
                action = _action_phrase(graph, op.target.name)
                return f"What do we do {anchor} we {action}?"
    return "What will we do next?"


def _temporal_order(graph: AmrGraph) -> str:
    ops = sorted((e for e in graph.top_edges() if _OP_ROLE.match(e.role)),
                 key=lambda e: int(e.role[3:]))
    actions = [_target_phrase(graph, e.target) for e in ops[:2]]
    return f"Do we {' or '.join(actions)} first?"


_SKELETONS = {
    "role_specific": _role_specific,
    "instruction_how": _instruction_how,
    "instruction_what_with": _instruction_what_with,
    "polarity_yes": _polarity,
    "polarity_no": _polarity,
    "temporal_mixture": _temporal_mixture,
    "temporal_next": _temporal_next_prev,
    "temporal_prev": _temporal_next_prev,
    "temporal_order": _temporal_order,
}


def fallback_realizer(candidate) -> str:
    """Offline surface form for a question graph.

    Category-specific skeletons filled with concept lemmas in written
    graph order; no model involved, so output is a function of the
    candidate alone.
    """
    try:
        skeleton = _SKELETONS[candidate.category]
    except KeyError:
        raise UnknownCategory(
            f"no offline skeleton for category {candidate.category!r}") from None
    return skeleton(candidate.question_amr)


# --- round-trip filtering ---

_VARIANTS = {"precision": 0, "recall": 1, "f1": 2}


class FilterOutcome(list):
    """The kept pairs in input order, with the full audit attached.

    Iterating (or indexing) yields exactly the kept pairs; dropped
    carries (pair, score) and skipped carries (pair, reason) for
    pairs the backend failed on.
    """

    def __init__(self, kept=(), dropped=(), skipped=()):
        super().__init__(kept)
        self.dropped = list(dropped)
        self.skipped = list(skipped)

    @property
    def kept(self) -> list:
        return list(self)


def round_trip_filter(pairs, client, threshold: float = 0.25,
                      variant: str = "f1") -> FilterOutcome:
    """Keep (question, answer, context) pairs the backend can answer back.

    Each question is re-answered from its context and compared with the
    original answer by ROUGE-1; the pair survives only when the score
    strictly exceeds the threshold.  Backend failures skip that pair
    alone.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    if variant not in _VARIANTS:
        raise ValueError(f"unknown score variant {variant!r}")
    index = _VARIANTS[variant]
    kept, dropped, skipped = [], [], []
    for pair in pairs:
        question, answer, context = pair
        try:
            returned = client.answer_question(context, question)
        except BackendError as exc:
            skipped.append((pair, str(exc)))
            continue
        score = rouge1_parts(answer, returned)[index]
        if score > threshold:
            kept.append(pair)
        else:
            dropped.append((pair, score))
    return FilterOutcome(kept, dropped, skipped)
