"""Temporal questions composed from flow graphs and AMR templates.

Three question families come out of the recipe-level flow graph rather
than any single sentence: what goes into a named mixture, what we do
next or before a given action, and which of two actions comes first.
Questions are built by grafting action or ingredient subgraphs into
slot positions of template AMRs shipped as package data.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .amr import (
    AmrGraph,
    Const,
    Edge,
    Var,
    _gc,
    fresh_var,
    graft_subgraph,
    parse_penman_blocks,
    path_to,
    remove_roles,
    subgraph,
)
from .flowgraph import (
    FlowGraph,
    MixtureRef,
    expansion_acts,
    ingredients_of,
    mixtures,
    next_actions,
    order_pairs,
    prev_actions,
)
from .qgen_single import QaCandidate


class TemporalError(Exception):
    """Base class for template and composition failures."""


class BadPlaceholderCount(TemporalError):
    pass


class DuplicateTemplateId(TemporalError):
    pass


class MissingActionAmr(TemporalError):
    pass


_SLOT = re.compile(r"^slot-(\d+)$")
_FRAME = re.compile(r"-\d+$")
_OP_ROLE = re.compile(r"^:op\d+$")

# Placeholders each category must carry: mixtures and before/after
# questions embed one subgraph, order questions compare two.  The
# context-free next variant has none.
_SLOT_COUNTS = {
    "temporal_mixture": (1,),
    "temporal_next": (0, 1),
    "temporal_prev": (1,),
    "temporal_order": (2,),
}


@dataclass(frozen=True)
class QuestionTemplate:
    """A question pattern with slot-N placeholder concepts."""

    id: str
    category: str
    surface_hint: str
    pattern_amr: AmrGraph

    @property
    def slots(self) -> int:
        return len(_slot_numbers(self.pattern_amr))


@dataclass(frozen=True)
class ActionAmr:
    """One action's graph, cut from its sentence's AMR.

    The root is a verb frame except when a multi-action sentence could
    not be split and the whole sentence graph stands in for each of its
    actions.  ``realized`` keeps the imperative sentence text for
    fallback answer rendering.
    """

    act_id: int
    amr: AmrGraph
    realized: str


def _slot_numbers(graph: AmrGraph) -> list[int]:
    nums = []
    for concepts in graph.nodes.values():
        for concept in concepts:
            m = _SLOT.match(concept)
            if m:
                nums.append(int(m.group(1)))
    return sorted(nums)


def load_templates(source=None) -> list[QuestionTemplate]:
    """Read question templates from a PENMAN file.

    Each block carries ``# ::id``, ``# ::category`` and ``# ::surface``
    headers.  With no argument the packaged default set is loaded.
    """
    if source is None:
        text = (resources.files("recipeqg") / "data" / "temporal_templates.penman").read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    templates: list[QuestionTemplate] = []
    seen: set[str] = set()
    for graph in parse_penman_blocks(text):
        template_id = graph.metadata.get("id")
        category = graph.metadata.get("category")
        surface = graph.metadata.get("surface")
        if not template_id or not category or not surface:
            raise TemporalError("template block is missing ::id, ::category or ::surface")
        if category not in _SLOT_COUNTS:
            raise TemporalError(f"unknown template category {category!r}")
        if template_id in seen:
            raise DuplicateTemplateId(template_id)
        seen.add(template_id)
        numbers = _slot_numbers(graph)
        if len(numbers) not in _SLOT_COUNTS[category]:
            raise BadPlaceholderCount(
                f"{template_id}: {category} takes {_SLOT_COUNTS[category]} slot(s), found {len(numbers)}")
        if numbers != list(range(1, len(numbers) + 1)):
            raise BadPlaceholderCount(f"{template_id}: slots must be numbered 1..{len(numbers)}")
        templates.append(QuestionTemplate(template_id, category, surface, graph))
    return templates


def instantiate(template: QuestionTemplate, fillers: Sequence[AmrGraph]) -> AmrGraph:
    """Graft one filler graph onto each slot, in slot order."""
    fillers = list(fillers)
    if len(fillers) != template.slots:
        raise ValueError(
            f"template {template.id} takes {template.slots} filler(s), got {len(fillers)}")
    out = template.pattern_amr.copy()
    for number, filler in enumerate(fillers, start=1):
        concept = f"slot-{number}"
        slot_var = next(v for v, cs in out.nodes.items() if concept in cs)
        path = path_to(out, slot_var)
        if path is None:
            raise TemporalError(f"{template.id}: {concept} sits at the pattern root")
        out = graft_subgraph(out, path, filler)
    return out


# --- ingredient names as graphs ---

_SKIP_WORDS = frozenset({"the", "a", "an", "of"})
_NUMBER_WORDS = {
    "one": "1", "two": "2", "three": "3", "four": "4", "five": "5",
    "six": "6", "seven": "7", "eight": "8", "nine": "9", "ten": "10",
}
# Past participles that read as preparation steps become -of frames on
# the head noun, e.g. "chopped onions" keeps chop-01 attached.
PARTICIPLE_FRAMES = {
    "beaten": "beat-01",
    "boiled": "boil-01",
    "chopped": "chop-01",
    "cooked": "cook-01",
    "crushed": "crush-01",
    "diced": "dice-01",
    "drained": "drain-01",
    "fried": "fry-01",
    "grated": "grate-02",
    "ground": "grind-01",
    "mashed": "mash-01",
    "melted": "melt-01",
    "minced": "mince-01",
    "mixed": "mix-01",
    "peeled": "peel-01",
    "roasted": "roast-01",
    "shredded": "shred-01",
    "sliced": "slice-01",
    "toasted": "toast-01",
    "whipped": "whip-01",
}
_NOT_PLURAL = frozenset({
    "asparagus", "cheese", "couscous", "hummus", "molasses", "swiss",
})


def _singular(word: str) -> str:
    if word in _NOT_PLURAL or len(word) <= 3:
        return word
    if word.endswith("ies"):
        return word[:-3] + "y"
    if word.endswith(("ches", "shes", "sses", "xes", "zes", "oes")):
        return word[:-2]
    if word.endswith(("ss", "us")) or not word.endswith("s"):
        return word
    return word[:-1]


def name_to_amr(name: str) -> AmrGraph:
    """Render an ingredient or mixture name as a small entity graph.

    The last plain noun becomes the head; earlier nouns attach as :mod,
    counts as :quant constants, and known past participles as inverse
    frames.  Articles are dropped and plural heads singularized.
    """
    words = [w for w in re.findall(r"[a-z0-9]+", name.lower()) if w not in _SKIP_WORDS]
    quant: str | None = None
    frames: list[str] = []
    nouns: list[str] = []
    for word in words:
        if word.isdigit():
            quant = word
        elif word in _NUMBER_WORDS:
            quant = _NUMBER_WORDS[word]
        elif word in PARTICIPLE_FRAMES:
            frames.append(PARTICIPLE_FRAMES[word])
        else:
            nouns.append(word)
    if not nouns:
        nouns = ["thing"]
    head = _singular(nouns[-1])
    taken: set[str] = set()
    root = fresh_var(taken, head)
    taken.add(root)
    nodes: dict[str, tuple[str, ...]] = {root: (head,)}
    edges: list[Edge] = []
    if quant is not None:
        edges.append(Edge(root, ":quant", Const(quant)))
    for noun in nouns[:-1]:
        var = fresh_var(taken, noun)
        taken.add(var)
        nodes[var] = (noun,)
        edges.append(Edge(root, ":mod", Var(var)))
    for frame in frames:
        var = fresh_var(taken, frame)
        taken.add(var)
        nodes[var] = (frame,)
        edges.append(Edge(root, ":ARG1-of", Var(var)))
    out = AmrGraph(root, nodes, edges)
    out.validate()
    return out


def _copy_into(nodes: dict, edges: list, taken: set, graph: AmrGraph) -> str:
    """Append a renamed copy of ``graph`` to the store, returning its root."""
    mapping: dict[str, str] = {}
    for var, concepts in graph.nodes.items():
        fresh = fresh_var(taken, concepts[0])
        taken.add(fresh)
        mapping[var] = fresh
        nodes[fresh] = concepts
    for e in graph.edges:
        target = Var(mapping[e.target.name]) if isinstance(e.target, Var) else e.target
        edges.append(Edge(mapping[e.source], e.role, target))
    return mapping[graph.root]


def ingredients_answer(graph: FlowGraph, mixture: MixtureRef) -> AmrGraph:
    """The mixture's raw ingredients as one answer graph.

    Multiple ingredients join under an ``and`` compound.  When the first
    ingredient carries a preparation frame ("chopped carrots"), that
    frame is hoisted over the whole compound, which is how the published
    example reads "Chopped carrots and turnips".
    """
    items = [name_to_amr(n) for n in ingredients_of(graph, mixture)]
    if not items:
        return AmrGraph("n", {"n": ("nothing",)}, [])
    frame: tuple[str, ...] | None = None
    lead = next(iter(items[0].top_edges(":ARG1-of")), None)
    if lead is not None and isinstance(lead.target, Var):
        frame = items[0].nodes[lead.target.name]
        trimmed = items[0].copy()
        trimmed.edges = [e for e in trimmed.edges if e is not lead]
        _gc(trimmed)
        items[0] = trimmed
    nodes: dict[str, tuple[str, ...]] = {}
    edges: list[Edge] = []
    taken: set[str] = set()
    roots = [_copy_into(nodes, edges, taken, item) for item in items]
    if len(roots) == 1:
        top = roots[0]
    else:
        top = fresh_var(taken, "and")
        taken.add(top)
        nodes[top] = ("and",)
        for number, item_root in enumerate(roots, start=1):
            edges.append(Edge(top, f":op{number}", Var(item_root)))
    if frame is not None:
        frame_var = fresh_var(taken, frame[0])
        taken.add(frame_var)
        nodes[frame_var] = frame
        edges.append(Edge(frame_var, ":ARG1", Var(top)))
        top = frame_var
    out = AmrGraph(top, nodes, edges)
    out.validate()
    return out


# --- action graphs ---

def extract_action_amrs(graph: FlowGraph, sentence_amrs: Mapping[int, AmrGraph]) -> dict[int, ActionAmr]:
    """Cut one graph per action out of the sentence AMRs.

    Single-action sentences map directly.  Sentences holding several
    actions are split on the top-level verb-frame conjuncts; when that
    does not line up, every action falls back to the whole sentence
    graph and a warning records the miss.
    """
    by_sentence: dict[int, list] = {}
    for act in graph.actions:
        by_sentence.setdefault(act.sent_index, []).append(act)
    out: dict[int, ActionAmr] = {}
    for sent_index, acts in sorted(by_sentence.items()):
        if sent_index not in sentence_amrs:
            raise MissingActionAmr(f"no sentence graph for sentence {sent_index}")
        amr = sentence_amrs[sent_index]
        text = graph.sentence(sent_index)
        if len(acts) == 1:
            out[acts[0].act_id] = ActionAmr(acts[0].act_id, amr.copy(), text)
            continue
        parts = _split_actions(amr, len(acts))
        if parts is None:
            warnings.warn(
                f"sentence {sent_index} holds {len(acts)} actions but does not "
                "split into that many verb frames; using the whole graph for each")
            parts = [amr.copy() for _ in acts]
        for act, part in zip(acts, parts):
            out[act.act_id] = ActionAmr(act.act_id, part, text)
    return out


def _split_actions(amr: AmrGraph, count: int) -> list[AmrGraph] | None:
    if amr.concept(amr.root) not in ("and", "multi-sentence"):
        return None
    ops = [e for e in amr.top_edges() if _OP_ROLE.match(e.role)]
    ops.sort(key=lambda e: int(e.role[3:]))
    targets = [e.target.name for e in ops if isinstance(e.target, Var)]
    if len(targets) != count:
        return None
    if not all(_FRAME.search(amr.concept(t)) for t in targets):
        return None
    return [subgraph(amr, t) for t in targets]


def _embedded(amr: AmrGraph) -> AmrGraph:
    """The action graph as it embeds under another frame: no top-level
    imperative marker or agent."""
    keep = {e.role for e in amr.top_edges() if e.role not in (":mode", ":ARG0")}
    return remove_roles(amr, keep)


def _require_action_amrs(graph: FlowGraph, action_amrs: Mapping[int, ActionAmr]) -> None:
    missing = [a.act_id for a in graph.actions if a.act_id not in action_amrs]
    if missing:
        raise MissingActionAmr(f"no graph for action(s) {missing}")


# --- generators ---

def gen_mixture_questions(graph: FlowGraph, templates: Sequence[QuestionTemplate],
                          sentence_amrs: Mapping[int, AmrGraph] | None = None) -> list[QaCandidate]:
    """Every mixture template against every named mixture.

    The slot takes the mixture name rendered as a graph; the shared
    answer compounds the mixture's raw ingredients.  ``sentence_amrs``
    is accepted for interface symmetry with the action generators; the
    composition itself only needs the flow graph.
    """
    del sentence_amrs
    mixture_templates = [t for t in templates if t.category == "temporal_mixture"]
    out: list[QaCandidate] = []
    for mixture in mixtures(graph):
        if not mixture.named:
            continue
        filler = name_to_amr(mixture.name)
        answer = ingredients_answer(graph, mixture)
        sents = tuple(sorted({
            graph.actions[a].sent_index for a in expansion_acts(graph, mixture)}))
        for template in mixture_templates:
            out.append(QaCandidate(
                instantiate(template, [filler]), "temporal_mixture",
                answer_amr=answer.copy(), provenance=sents))
    return out


def gen_next_prev_questions(graph: FlowGraph, templates: Sequence[QuestionTemplate],
                            action_amrs: Mapping[int, ActionAmr]) -> list[QaCandidate]:
    """What we do after and before each action.

    The focus action embeds under :time (after/before :op1 ...); each
    neighbouring action yields its own candidate whose answer is that
    action's full graph, imperative marker and all.  Provenance is the
    ordered pair (focus sentence, answer sentence), so consumers can
    realize the answer from the recipe text by its last entry.
    """
    _require_action_amrs(graph, action_amrs)
    next_templates = [t for t in templates if t.category == "temporal_next"]
    prev_templates = [t for t in templates if t.category == "temporal_prev"]
    out: list[QaCandidate] = []
    for act in graph.actions:
        for templates_for, neighbours, category in (
                (next_templates, next_actions(graph, act.act_id), "temporal_next"),
                (prev_templates, prev_actions(graph, act.act_id), "temporal_prev")):
            if not neighbours:
                continue
            embedded = _embedded(action_amrs[act.act_id].amr)
            for template in templates_for:
                question = instantiate(template, [embedded] if template.slots else [])
                for neighbour in neighbours:
                    out.append(QaCandidate(
                        question.copy(), category,
                        answer_amr=action_amrs[neighbour.act_id].amr.copy(),
                        provenance=(act.sent_index, neighbour.sent_index)))
    return out


def gen_order_questions(graph: FlowGraph, templates: Sequence[QuestionTemplate],
                        action_amrs: Mapping[int, ActionAmr]) -> list[QaCandidate]:
    """Which of two provenance-ordered actions comes first.

    Each comparable pair fills every order frame in both slot orders,
    four questions a pair.  The answer embeds the ancestor action and
    marks it :ord (ordinal-entity :value 1).  The ``or`` frame also gets
    a shared first-person-plural subject on both conjuncts, matching how
    such questions are spoken.
    """
    _require_action_amrs(graph, action_amrs)
    order_templates = [t for t in templates if t.category == "temporal_order"]
    out: list[QaCandidate] = []
    for first_act, second_act, ancestor in order_pairs(graph):
        embedded = (_embedded(action_amrs[first_act.act_id].amr),
                    _embedded(action_amrs[second_act.act_id].amr))
        answer = _with_ordinal(_embedded(action_amrs[ancestor.act_id].amr))
        sents = tuple(sorted({first_act.sent_index, second_act.sent_index}))
        for template in order_templates:
            for fillers in (embedded, embedded[::-1]):
                question = instantiate(template, fillers)
                if template.pattern_amr.concept(template.pattern_amr.root) == "or":
                    _add_shared_subject(question)
                out.append(QaCandidate(
                    question, "temporal_order",
                    answer_amr=answer.copy(), provenance=sents))
    return out


def _with_ordinal(amr: AmrGraph) -> AmrGraph:
    out = amr.copy()
    ordinal = fresh_var(set(out.nodes), "ordinal-entity")
    out.nodes[ordinal] = ("ordinal-entity",)
    out.edges.append(Edge(out.root, ":ord", Var(ordinal)))
    out.edges.append(Edge(ordinal, ":value", Const("1")))
    out.validate()
    return out


def _add_shared_subject(question: AmrGraph) -> None:
    subject = fresh_var(set(question.nodes), "we")
    question.nodes[subject] = ("we",)
    for role in (":op1", ":op2"):
        edges = question.top_edges(role)
        if edges and isinstance(edges[0].target, Var):
            question.edges.append(Edge(edges[0].target.name, ":ARG0", Var(subject)))
    question.validate()
