"""Recipe action flow graphs: loading, validation, and traversals.

A flow graph arrives as a JSON document: a list of sentences, each with
a list of actions.  Every action input and cookware entry carries a
provenance index, which is either -1 (the entity enters the recipe raw)
or the id of the earlier action that produced it.  The ``implicit``
input name marks a carried-over mixture that the sentence never spells
out.

All traversals work on validated graphs, so they can assume provenance
indexes point strictly backwards and the combined provenance plus
next-action relation is acyclic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class FlowGraphError(Exception):
    pass


class SchemaViolation(FlowGraphError):
    pass


class ForwardProvenance(FlowGraphError):
    pass


class CycleDetected(FlowGraphError):
    pass


PRONOUNS = frozenset({"it", "them", "they", "this", "these", "that", "those"})

IMPLICIT = "implicit"


@dataclass(frozen=True)
class Action:
    act_id: int
    sent_index: int
    verb: str
    inputs: dict[str, int]
    cookware: dict[str, int]
    next_action: int | None = None


@dataclass(frozen=True)
class MixtureRef:
    """A produced entity mentioned as the input of a later action."""

    name: str
    producing_act: int
    named: bool


@dataclass(frozen=True)
class FlowGraph:
    actions: tuple[Action, ...]
    sentences: tuple[tuple[int, str], ...]

    def sentence(self, sent_index: int) -> str:
        for idx, text in self.sentences:
            if idx == sent_index:
                return text
        raise KeyError(sent_index)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaViolation(message)


def _check_table(table: object, act_id: int, kind: str) -> dict[str, int]:
    _require(isinstance(table, dict), f"action {act_id}: {kind} must be an object")
    for name, prov in table.items():
        _require(isinstance(name, str) and name, f"action {act_id}: {kind} names must be non-empty strings")
        _require(type(prov) is int, f"action {act_id}: {kind} [{name!r}] must be an integer")
        _require(prov >= -1, f"action {act_id}: {kind} [{name!r}] is below -1")
        if name == IMPLICIT:
            _require(prov >= 0, f"action {act_id}: implicit entries must reference a producing action")
        if prov >= act_id:
            raise ForwardProvenance(
                f"action {act_id}: {kind} [{name!r}] references action {prov}, which is not earlier"
            )
    return dict(table)


def load_flowgraph(source) -> FlowGraph:
    """Load and validate a flow graph from a path or a parsed document."""
    if isinstance(source, (str, Path)):
        document = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        document = source
    _require(isinstance(document, list) and document, "document must be a non-empty list of sentences")

    actions: list[Action] = []
    sentences: list[tuple[int, str]] = []
    for sent in document:
        _require(isinstance(sent, dict), "each sentence must be an object")
        for key in ("sent_index", "sent", "actions"):
            _require(key in sent, f"sentence is missing {key!r}")
        sent_index = sent["sent_index"]
        _require(type(sent_index) is int, "sent_index must be an integer")
        _require(isinstance(sent["sent"], str), "sent must be a string")
        _require(isinstance(sent["actions"], list), "actions must be a list")
        if sentences:
            _require(sent_index > sentences[-1][0], "sentences must be ordered by sent_index")
        sentences.append((sent_index, sent["sent"]))
        for raw in sent["actions"]:
            _require(isinstance(raw, dict), f"sentence {sent_index}: actions must be objects")
            for key in ("act_id", "action", "input", "cookware"):
                _require(key in raw, f"sentence {sent_index}: action is missing {key!r}")
            act_id = raw["act_id"]
            _require(type(act_id) is int, "act_id must be an integer")
            _require(act_id == len(actions), f"act_id {act_id} out of order, expected {len(actions)}")
            _require(isinstance(raw["action"], str) and raw["action"], "action verb must be a non-empty string")
            nxt = raw.get("next_action")
            _require(nxt is None or type(nxt) is int, f"action {act_id}: next_action must be an integer")
            actions.append(Action(
                act_id=act_id,
                sent_index=sent_index,
                verb=raw["action"],
                inputs=_check_table(raw["input"], act_id, "input"),
                cookware=_check_table(raw["cookware"], act_id, "cookware"),
                next_action=nxt,
            ))

    for act in actions:
        if act.next_action is not None:
            _require(0 <= act.next_action < len(actions),
                     f"action {act.act_id}: next_action {act.next_action} does not exist")

    _check_acyclic(actions)
    return FlowGraph(actions=tuple(actions), sentences=tuple(sentences))


def _check_acyclic(actions: list[Action]) -> None:
    """Reject cycles in the combined provenance plus next-action relation.

    Provenance edges always point backwards, so any cycle has to run
    through a next_action edge; we still check the combined relation.
    """
    forward: dict[int, set[int]] = {a.act_id: set() for a in actions}
    for act in actions:
        for prov in list(act.inputs.values()) + list(act.cookware.values()):
            if prov >= 0:
                forward[prov].add(act.act_id)
        if act.next_action is not None:
            forward[act.act_id].add(act.next_action)

    state: dict[int, int] = {}

    def walk(node: int) -> None:
        state[node] = 1
        for nxt in forward[node]:
            mark = state.get(nxt)
            if mark == 1:
                raise CycleDetected(f"actions {node} and {nxt} form a temporal cycle")
            if mark is None:
                walk(nxt)
        state[node] = 2

    for act in actions:
        if act.act_id not in state:
            walk(act.act_id)


def mixtures(graph: FlowGraph) -> list[MixtureRef]:
    """Every produced entity mentioned as an input, first mention wins.

    The ``named`` flag is False for pronouns and the implicit marker;
    only named mixtures can anchor a question.
    """
    seen: dict[str, MixtureRef] = {}
    for act in graph.actions:
        for name, prov in act.inputs.items():
            if prov >= 0 and name not in seen:
                named = name != IMPLICIT and name.lower() not in PRONOUNS
                seen[name] = MixtureRef(name=name, producing_act=prov, named=named)
    return list(seen.values())


def ingredients_of(graph: FlowGraph, mixture: MixtureRef) -> list[str]:
    """Raw ingredient names of a mixture, unique, in first-seen order.

    Recursively expands provenance through the producing action's inputs
    until everything bottoms out at raw (-1) entries.  Cookware never
    contributes ingredients.
    """
    expansions: dict[int, list[str]] = {}

    def expand(act_id: int) -> list[str]:
        if act_id not in expansions:
            found: list[str] = []
            for name, prov in graph.actions[act_id].inputs.items():
                if prov < 0:
                    found.append(name)
                else:
                    found.extend(expand(prov))
            expansions[act_id] = found
        return expansions[act_id]

    ordered: list[str] = []
    for name in expand(mixture.producing_act):
        if name not in ordered:
            ordered.append(name)
    return ordered


def expansion_acts(graph: FlowGraph, mixture: MixtureRef) -> list[int]:
    """Action ids visited while expanding a mixture, in visit order."""
    visited: list[int] = []

    def expand(act_id: int) -> None:
        if act_id in visited:
            return
        visited.append(act_id)
        for prov in graph.actions[act_id].inputs.values():
            if prov >= 0:
                expand(prov)

    expand(mixture.producing_act)
    return visited


def _parent_ids(graph: FlowGraph, act_id: int) -> set[int]:
    act = graph.actions[act_id]
    parents = {p for p in list(act.inputs.values()) + list(act.cookware.values()) if p >= 0}
    parents.update(a.act_id for a in graph.actions if a.next_action == act_id)
    return parents


def next_actions(graph: FlowGraph, act_id: int) -> list[Action]:
    """Actions that follow this one: the explicit next action first,
    then the other actions that feed into it and come later than this
    one, in id order."""
    act = graph.actions[act_id]
    if act.next_action is None:
        return []
    nxt = act.next_action
    extra = sorted(i for i in _parent_ids(graph, nxt) if i > act_id and i != nxt)
    return [graph.actions[i] for i in [nxt, *extra]]


def prev_actions(graph: FlowGraph, act_id: int) -> list[Action]:
    """Actions directly before this one: provenance parents plus any
    action whose next_action points here, in id order."""
    return [graph.actions[i] for i in sorted(_parent_ids(graph, act_id))]


def order_pairs(graph: FlowGraph) -> list[tuple[Action, Action, Action]]:
    """All pairs comparable under the provenance partial order.

    Returns (a, b, first) with a.act_id < b.act_id and first the one
    whose output feeds (transitively) into the other.  Only provenance
    makes actions comparable; next_action links do not count here.
    """
    ancestors: dict[int, set[int]] = {}
    for act in graph.actions:
        acc: set[int] = set()
        for prov in list(act.inputs.values()) + list(act.cookware.values()):
            if prov >= 0:
                acc.add(prov)
                acc.update(ancestors[prov])
        ancestors[act.act_id] = acc

    pairs: list[tuple[Action, Action, Action]] = []
    for a in graph.actions:
        for b in graph.actions[a.act_id + 1:]:
            if a.act_id in ancestors[b.act_id]:
                pairs.append((a, b, a))
            elif b.act_id in ancestors[a.act_id]:
                pairs.append((a, b, b))
    return pairs
