"""Single-instruction question generation.

Every generator here takes one sentence-level graph and derives
question graphs by swapping a targeted subgraph for ``amr-unknown``;
the detached subgraph (or a fixed token) becomes the answer.  Three
families are produced:

* role-specific questions for the roles listed in SUPPORTED_ROLES,
* instruction-level questions ("how", "what do you do with"),
* polarity yes/no questions, where the "No" variant grafts a
  same-role subgraph from a donor sentence.

All generators are pure: the input graph is never modified, and any
randomness is driven by an explicit integer seed.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path

from .amr import (
    AmrGraph,
    Edge,
    GraphPath,
    Var,
    _gc,
    fresh_var,
    graft_subgraph,
    path_to,
    remove_roles,
    replace_with_unknown,
    subgraph,
)


class QgenError(Exception):
    """Base class for question-generation failures."""


class MissingArg1(QgenError):
    pass


class MissingArg2(QgenError):
    pass


class UnsupportedRole(QgenError):
    pass


class NoObjectArgs(QgenError):
    pass


class NoReplaceableRole(QgenError):
    pass


# Order doubles as the emission order of gen_role_questions.
SUPPORTED_ROLES = (
    ":ARG1",
    ":ARG2",
    ":time",
    ":duration",
    ":location",
    ":instrument",
    ":mod",
    ":domain",
    ":purpose",
    ":accompanier",
    ":degree",
    ":value",
    ":quant",
)

_DIRECT_ROLES = frozenset(SUPPORTED_ROLES[3:])

CATEGORIES = (
    "role_specific",
    "instruction_how",
    "instruction_what_with",
    "polarity_yes",
    "polarity_no",
    "temporal_mixture",
    "temporal_next",
    "temporal_prev",
    "temporal_order",
)

_ARG_ROLE = re.compile(r"^:ARG\d+$")
_OBJECT_ROLE = re.compile(r"^:ARG[1-9]\d*$")
_OP_ROLE = re.compile(r"^:op\d+$")
_ARTICLES = frozenset({"the", "a", "an"})


@dataclass(frozen=True)
class QaCandidate:
    """One question/answer pair, graphs first, text filled later.

    Exactly one of answer_amr / answer_text is set at creation; the
    realization stage records surface text in separate records rather
    than mutating candidates.
    """

    question_amr: AmrGraph
    category: str
    role: str | None = None
    answer_amr: AmrGraph | None = None
    answer_text: str | None = None
    question_text: str | None = None
    provenance: tuple = ()

    def __post_init__(self) -> None:
        if (self.answer_amr is None) == (self.answer_text is None):
            raise ValueError("exactly one of answer_amr / answer_text must be set")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")


def _read_terms(resource) -> frozenset[str]:
    terms = set()
    for line in resource.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.add(line)
    return frozenset(terms)


@dataclass(frozen=True)
class RuleLexicons:
    """Editable word lists steering the :ARG2 decision cascade."""

    directional_verbs: frozenset[str]
    directional_prepositions: frozenset[str]
    instrument_concepts: frozenset[str]

    def __post_init__(self) -> None:
        if not (self.directional_verbs and self.directional_prepositions
                and self.instrument_concepts):
            raise ValueError("lexicons must be non-empty")

    @classmethod
    def load(cls, directory) -> RuleLexicons:
        base = directory if hasattr(directory, "joinpath") else Path(directory)
        return cls(
            directional_verbs=_read_terms(base / "directional_verbs.txt"),
            directional_prepositions=_read_terms(base / "directional_prepositions.txt"),
            instrument_concepts=_read_terms(base / "instrument_concepts.txt"),
        )

    @classmethod
    def default(cls) -> RuleLexicons:
        global _DEFAULT_LEXICONS
        if _DEFAULT_LEXICONS is None:
            from importlib import resources

            _DEFAULT_LEXICONS = cls.load(resources.files("recipeqg") / "data")
        return _DEFAULT_LEXICONS


_DEFAULT_LEXICONS: RuleLexicons | None = None


def _lemma(concept: str) -> str:
    return re.sub(r"-\d+$", "", concept)


def _top_index(graph: AmrGraph, role: str, occurrence: int = 0) -> int | None:
    seen = 0
    for i, e in enumerate(graph.edges):
        if e.source == graph.root and e.role == role:
            if seen == occurrence:
                return i
            seen += 1
    return None


def _arg2_new_role(amr: AmrGraph, lex: RuleLexicons, sentence: str | None) -> str | None:
    """Rename target for a non-equivalent :ARG2, or None when it may swap."""
    edge = amr.top_edges(":ARG2")[0]
    if isinstance(edge.target, Var):
        head = _lemma(amr.concept(edge.target.name))
    else:
        head = edge.target.token
    if head in lex.instrument_concepts:
        return ":instrument"
    if _lemma(amr.concept(amr.root)) in lex.directional_verbs:
        return ":location"
    if sentence:
        words = re.findall(r"[a-z]+", sentence.lower())
        if head in words:
            j = words.index(head) - 1
            while j >= 0 and words[j] in _ARTICLES:
                j -= 1
            if j >= 0 and words[j] in lex.directional_prepositions:
                return ":location"
    return None


def _attribute_questions(graph: AmrGraph) -> list[QaCandidate]:
    """Questions on :mod / :quant attached to the current :ARG1 entity."""
    entity = graph.top_edges(":ARG1")[0].target
    if not isinstance(entity, Var):
        return []
    out: list[QaCandidate] = []
    counts = {":mod": 0, ":quant": 0}
    for e in graph.out_edges(entity.name):
        if e.role not in counts:
            continue
        occ = counts[e.role]
        counts[e.role] += 1
        base = graph
        if e.role == ":mod":
            # a :mod question never keeps the sibling quantity
            base = graph.copy()
            base.edges = [x for x in base.edges
                          if not (x.source == entity.name and x.role == ":quant")]
        question, answer = replace_with_unknown(base, GraphPath.of(":ARG1", (e.role, occ)))
        out.append(QaCandidate(question, "role_specific", role=e.role, answer_amr=answer))
    return out


def _split_arg1(amr: AmrGraph, and_var: str, ops: list[Edge], pick: int,
                lex: RuleLexicons, sentence: str | None) -> AmrGraph:
    """Re-root one compound entity as :ARG1 and regroup the rest as :ARG2."""
    out = amr.copy()
    group = [e.target for i, e in enumerate(ops) if i != pick]
    arg2 = _top_index(out, ":ARG2")
    if arg2 is not None:
        new_role = _arg2_new_role(out, lex, sentence)
        if new_role is None:
            # semantically equivalent: its content joins the regrouped entities
            group.append(out.edges[arg2].target)
            del out.edges[arg2]
        else:
            e = out.edges[arg2]
            out.edges[arg2] = Edge(e.source, new_role, e.target)
    a1 = _top_index(out, ":ARG1")
    out.edges[a1] = Edge(out.root, ":ARG1", ops[pick].target)
    if len(group) == 1:
        out.edges.insert(a1 + 1, Edge(out.root, ":ARG2", group[0]))
    elif group:
        out.edges = [e for e in out.edges
                     if not (e.source == and_var and _OP_ROLE.match(e.role))]
        a1 = _top_index(out, ":ARG1")
        for n, tgt in enumerate(group, start=1):
            out.edges.append(Edge(and_var, f":op{n}", tgt))
        out.edges.insert(a1 + 1, Edge(out.root, ":ARG2", Var(and_var)))
    _gc(out)
    return out


def gen_arg1_questions(amr: AmrGraph, lex: RuleLexicons | None = None,
                       sentence: str | None = None) -> list[QaCandidate]:
    """Whole-:ARG1 question, plus per-entity splits and attribute questions."""
    if not amr.top_edges(":ARG1"):
        raise MissingArg1("no :ARG1 to question")
    lex = lex or RuleLexicons.default()
    question, answer = replace_with_unknown(amr, GraphPath.of(":ARG1"))
    out = [QaCandidate(question, "role_specific", role=":ARG1", answer_amr=answer)]
    target = amr.top_edges(":ARG1")[0].target
    if isinstance(target, Var) and amr.concept(target.name) == "and":
        ops = sorted((e for e in amr.out_edges(target.name) if _OP_ROLE.match(e.role)),
                     key=lambda e: int(e.role[3:]))
        if ops:
            for pick in range(len(ops)):
                split = _split_arg1(amr, target.name, ops, pick, lex, sentence)
                q, a = replace_with_unknown(split, GraphPath.of(":ARG1"))
                out.append(QaCandidate(q, "role_specific", role=":ARG1", answer_amr=a))
                out.extend(_attribute_questions(split))
            return out
    out.extend(_attribute_questions(amr))
    return out


def gen_arg2_questions(amr: AmrGraph, lex: RuleLexicons,
                       sentence: str | None = None) -> list[QaCandidate]:
    """Instrument / directional rename, else swap :ARG1 and :ARG2."""
    i2 = _top_index(amr, ":ARG2")
    if i2 is None:
        raise MissingArg2("no :ARG2 to question")
    base = amr.copy()
    new_role = _arg2_new_role(base, lex, sentence)
    if new_role is not None:
        e = base.edges[i2]
        base.edges[i2] = Edge(e.source, new_role, e.target)
        occ = sum(1 for x in base.edges[:i2]
                  if x.source == base.root and x.role == new_role)
        question, answer = replace_with_unknown(base, GraphPath.of((new_role, occ)))
        return [QaCandidate(question, "role_specific", role=new_role, answer_amr=answer)]
    i1 = _top_index(base, ":ARG1")
    if i1 is None:
        raise MissingArg1("swapping :ARG2 into :ARG1 needs an :ARG1")
    t1, t2 = base.edges[i1].target, base.edges[i2].target
    base.edges[i1] = Edge(base.root, ":ARG1", t2)
    base.edges[i2] = Edge(base.root, ":ARG2", t1)
    question, answer = replace_with_unknown(base, GraphPath.of(":ARG1"))
    return [QaCandidate(question, "role_specific", role=":ARG2", answer_amr=answer)]


def gen_time_question(amr: AmrGraph) -> QaCandidate | None:
    """Strip to the core roles and question :time (an "until" becomes :extent)."""
    if not amr.top_edges(":time"):
        return None
    base = remove_roles(amr, {":ARG1", ":ARG2", ":time"})
    index = _top_index(base, ":time")
    edge = base.edges[index]
    role = ":time"
    if isinstance(edge.target, Var) and base.concept(edge.target.name) == "until":
        base.edges[index] = Edge(edge.source, ":extent", edge.target)
        role = ":extent"
    occ = sum(1 for e in base.edges[:index]
              if e.source == base.root and e.role == role)
    question, answer = replace_with_unknown(base, GraphPath.of((role, occ)))
    return QaCandidate(question, "role_specific", role=":time", answer_amr=answer)


def _containing_top_role(amr: AmrGraph, var: str) -> str | None:
    for top in amr.top_edges():
        if isinstance(top.target, Var) and var in subgraph(amr, top.target.name).nodes:
            return top.role
    return None


def gen_quantity_questions(amr: AmrGraph) -> list[QaCandidate]:
    """One question per non-temporal *-quantity node carrying a :quant."""
    out: list[QaCandidate] = []
    for var, concepts in amr.nodes.items():
        head = concepts[0]
        if not head.endswith("-quantity") or head == "temporal-quantity":
            continue
        if not any(e.role == ":quant" for e in amr.out_edges(var)):
            continue
        top_role = _containing_top_role(amr, var)
        if top_role is None:
            continue
        base = remove_roles(amr, {":ARG1", ":ARG2", ":location", top_role})
        if var not in base.nodes:
            continue
        path = path_to(base, var)
        if path is None:
            continue
        answer = subgraph(base, var)
        question, _ = replace_with_unknown(
            base, GraphPath(path.steps + ((":quant", 0),)))
        out.append(QaCandidate(question, "role_specific", role=":quant",
                               answer_amr=answer))
    return out


def gen_direct_role_question(amr: AmrGraph, role) -> QaCandidate | None:
    """Question a top-level role in place, answer = its detached subgraph."""
    role = str(role)
    if role not in _DIRECT_ROLES:
        raise UnsupportedRole(f"{role} has no direct question form")
    if not amr.top_edges(role):
        return None
    base = amr.copy()
    if role == ":mod":
        base.edges = [e for e in base.edges
                      if not (e.source == base.root and e.role == ":quant")]
    elif role == ":quant":
        base = remove_roles(base, {":ARG1", ":ARG2", ":location", ":quant"})
    question, answer = replace_with_unknown(base, GraphPath.of(role))
    return QaCandidate(question, "role_specific", role=role, answer_amr=answer)


def gen_how_question(amr: AmrGraph) -> QaCandidate:
    """Keep only the core arguments and ask for the :manner."""
    keep = {e.role for e in amr.top_edges() if _ARG_ROLE.match(e.role)}
    base = remove_roles(amr, keep)
    unknown = fresh_var(set(base.nodes), "amr-unknown")
    base.nodes[unknown] = ("amr-unknown",)
    base.edges.append(Edge(base.root, ":manner", Var(unknown)))
    base.validate()
    return QaCandidate(base, "instruction_how", role=":manner", answer_amr=amr.copy())


def gen_what_with_questions(amr: AmrGraph) -> list[QaCandidate]:
    """Rebuild the instruction around do-02 and ask what is done with it.

    The object arguments merge into one compound under :ARG2 (existing
    and-nodes are spliced); the compound question marks that node itself
    unknown through a re-entrant :ARG1, and each entity also gets its
    own question.  A one-entity compound would duplicate the entity
    question, so only the latter is emitted.
    """
    object_edges = [e for e in amr.top_edges() if _OBJECT_ROLE.match(e.role)]
    if not object_edges:
        raise NoObjectArgs("no object :ARGx role to ask about")
    keep = {e.role for e in amr.top_edges() if _ARG_ROLE.match(e.role)}
    base = remove_roles(amr, keep)
    base.nodes[base.root] = ("do-02",)
    entities = []
    and_var: str | None = None
    for e in base.top_edges():
        if not _OBJECT_ROLE.match(e.role):
            continue
        if isinstance(e.target, Var) and base.concept(e.target.name) == "and":
            ops = sorted((x for x in base.out_edges(e.target.name) if _OP_ROLE.match(x.role)),
                         key=lambda x: int(x.role[3:]))
            if ops:
                entities.extend(x.target for x in ops)
                if and_var is None:
                    and_var = e.target.name
                continue
        entities.append(e.target)
    position = next(i for i, e in enumerate(base.edges)
                    if e.source == base.root and _OBJECT_ROLE.match(e.role))

    def stripped() -> AmrGraph:
        g = base.copy()
        g.edges = [e for e in g.edges
                   if not (e.source == g.root and _OBJECT_ROLE.match(e.role))]
        if and_var is not None:
            g.edges = [e for e in g.edges
                       if not (e.source == and_var and _OP_ROLE.match(e.role))]
        return g

    out: list[QaCandidate] = []
    if len(entities) > 1:
        g = stripped()
        compound = and_var or fresh_var(set(g.nodes), "and")
        g.nodes[compound] = ("amr-unknown", "and")
        g.edges.insert(min(position, len(g.edges)), Edge(g.root, ":ARG2", Var(compound)))
        for n, tgt in enumerate(entities, start=1):
            g.edges.append(Edge(compound, f":op{n}", tgt))
        g.edges.append(Edge(g.root, ":ARG1", Var(compound)))
        _gc(g)
        g.validate()
        out.append(QaCandidate(g, "instruction_what_with", role=":ARG2",
                               answer_amr=amr.copy()))
    for tgt in entities:
        g = stripped()
        g.edges.insert(min(position, len(g.edges)), Edge(g.root, ":ARG2", tgt))
        unknown = fresh_var(set(g.nodes), "amr-unknown")
        g.nodes[unknown] = ("amr-unknown",)
        g.edges.append(Edge(g.root, ":ARG1", Var(unknown)))
        _gc(g)
        g.validate()
        out.append(QaCandidate(g, "instruction_what_with", role=":ARG2",
                               answer_amr=amr.copy()))
    return out


def _with_polarity_unknown(graph: AmrGraph) -> AmrGraph:
    out = graph.copy()
    unknown = fresh_var(set(out.nodes), "amr-unknown")
    out.nodes[unknown] = ("amr-unknown",)
    out.edges.append(Edge(out.root, ":polarity", Var(unknown)))
    out.validate()
    return out


def _graft_donor_role(base: AmrGraph, donor_pool, rng: random.Random) -> AmrGraph:
    """Swap one top-level role subgraph for a differing donor one."""
    slots: dict[str, tuple[int, str]] = {}
    counts: dict[str, int] = {}
    for e in base.top_edges():
        occ = counts.get(e.role, 0)
        counts[e.role] = occ + 1
        if e.role in (":ARG0", ":mode", ":polarity") or _OP_ROLE.match(e.role):
            continue
        if isinstance(e.target, Var):
            slots.setdefault(e.role, (occ, e.target.name))
    roles = list(slots)
    rng.shuffle(roles)
    for role in roles:
        occ, host_var = slots[role]
        host = subgraph(base, host_var)
        donors = []
        for g in donor_pool:
            for e in g.top_edges(role):
                if isinstance(e.target, Var):
                    donors.append(subgraph(g, e.target.name))
                    break
        rng.shuffle(donors)
        for donor in donors:
            if donor != host:
                return graft_subgraph(base, GraphPath.of((role, occ)), donor)
    raise NoReplaceableRole("no donor provides a differing same-role subgraph")


def gen_polarity_questions(amr: AmrGraph, donor_pool, rng_seed: int
                           ) -> tuple[QaCandidate, QaCandidate | None]:
    """Yes/No pair; the No variant is skipped when no donor role differs."""
    rng = random.Random(rng_seed)
    base = amr.copy()
    base.edges = [e for e in base.edges
                  if not (e.source == base.root and e.role == ":mode")]
    subject = rng.choice(("i", "we", "you"))
    a0 = _top_index(base, ":ARG0")
    if a0 is not None and isinstance(base.edges[a0].target, Var):
        base.nodes[base.edges[a0].target.name] = (subject,)
    else:
        var = fresh_var(set(base.nodes), subject)
        base.nodes[var] = (subject,)
        base.edges.insert(0, Edge(base.root, ":ARG0", Var(var)))
    yes = QaCandidate(_with_polarity_unknown(base), "polarity_yes",
                      role=":polarity", answer_text="Yes")
    try:
        grafted = _graft_donor_role(base, list(donor_pool), rng)
    except NoReplaceableRole:
        return yes, None
    no = QaCandidate(_with_polarity_unknown(grafted), "polarity_no",
                     role=":polarity", answer_text="No")
    return yes, no


def gen_role_questions(amr: AmrGraph, lex: RuleLexicons,
                       sentence: str | None = None) -> list[QaCandidate]:
    """All role-specific questions, in SUPPORTED_ROLES order."""
    out: list[QaCandidate] = []
    for role in SUPPORTED_ROLES:
        if role == ":ARG1":
            if amr.top_edges(":ARG1"):
                out.extend(gen_arg1_questions(amr, lex, sentence=sentence))
        elif role == ":ARG2":
            if amr.top_edges(":ARG2"):
                try:
                    out.extend(gen_arg2_questions(amr, lex, sentence=sentence))
                except MissingArg1:
                    pass
        elif role == ":time":
            cand = gen_time_question(amr)
            if cand is not None:
                out.append(cand)
        elif role == ":quant":
            out.extend(gen_quantity_questions(amr))
            cand = gen_direct_role_question(amr, ":quant")
            if cand is not None:
                out.append(cand)
        else:
            cand = gen_direct_role_question(amr, role)
            if cand is not None:
                out.append(cand)
    return out


def gen_all_single(amr: AmrGraph, lex: RuleLexicons, donor_pool=(),
                   rng_seed: int = 0, sentence: str | None = None
                   ) -> list[QaCandidate]:
    """Every single-instruction candidate for one sentence graph."""
    out = gen_role_questions(amr, lex, sentence=sentence)
    out.append(gen_how_question(amr))
    try:
        out.extend(gen_what_with_questions(amr))
    except NoObjectArgs:
        pass
    yes, no = gen_polarity_questions(amr, list(donor_pool), rng_seed)
    out.append(yes)
    if no is not None:
        out.append(no)
    return out
