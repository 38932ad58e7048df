"""AMR graphs in PENMAN notation: parsing, serialization, and editing.

The graph model is small on purpose.  A graph is a root variable, a
mapping from variable to a tuple of concepts (almost always one, but the
notation permits stacked concepts such as ``(a / amr-unknown / and``),
and an ordered list of edges.  Edge order is kept exactly as written
because :opX siblings are ordered and because a deterministic writer
needs a stable order for everything else.

Nothing here mutates a graph the caller handed in.  Edit operations
copy, rewrite, garbage collect, and re-validate, so a failed edit can
never corrupt its input.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path


class AmrError(Exception):
    """Base error. ``offset`` is a byte offset into the source, if known."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte {offset})"
        super().__init__(message)


class UnbalancedParens(AmrError):
    pass


class DuplicateVariableDefinition(AmrError):
    pass


class DanglingVariableReference(AmrError):
    pass


class EmptyInput(AmrError):
    pass


class UnreachableNode(AmrError):
    pass


class PathNotFound(AmrError):
    pass


class PathTargetsConstant(AmrError):
    pass


@dataclass(frozen=True)
class Var:
    """Reference to a node by variable name."""

    name: str


@dataclass(frozen=True)
class Const:
    """Attribute value: a bare token or a quoted string."""

    token: str
    quoted: bool = False


@dataclass(frozen=True)
class Edge:
    source: str
    role: str
    target: Var | Const


@dataclass(frozen=True)
class RoleLabel:
    """A role name with its inverse (-of) marking split out."""

    name: str
    inverse: bool = False

    @classmethod
    def parse(cls, text: str) -> RoleLabel:
        if not text.startswith(":"):
            raise ValueError(f"role labels start with ':', got {text!r}")
        if text.endswith("-of") and len(text) > 3:
            return cls(text[:-3], inverse=True)
        return cls(text)

    def __str__(self) -> str:
        return self.name + ("-of" if self.inverse else "")


@dataclass(frozen=True)
class GraphPath:
    """Address of an edge: (role, occurrence) steps from the root.

    Occurrences count same-role edges of the current node left to right
    in written order, starting at zero.
    """

    steps: tuple[tuple[str, int], ...]

    @classmethod
    def of(cls, *roles: str | tuple[str, int]) -> GraphPath:
        steps = []
        for r in roles:
            if isinstance(r, str):
                steps.append((r, 0))
            else:
                steps.append((r[0], int(r[1])))
        return cls(tuple(steps))


@dataclass(eq=False)
class AmrGraph:
    """A rooted graph: variables, their concepts, and ordered edges.

    Equality and hashing are structural: two graphs compare equal when
    they match up to a consistent renaming of variables, with :opX
    siblings compared in order and all other siblings as multisets.
    """

    root: str
    nodes: dict[str, tuple[str, ...]]
    edges: list[Edge]
    metadata: dict[str, str] = field(default_factory=dict)

    def copy(self) -> AmrGraph:
        return AmrGraph(self.root, dict(self.nodes), list(self.edges), dict(self.metadata))

    def out_edges(self, var: str) -> list[Edge]:
        return [e for e in self.edges if e.source == var]

    def concept(self, var: str) -> str:
        return self.nodes[var][0]

    def top_edges(self, role: str | None = None) -> list[Edge]:
        out = self.out_edges(self.root)
        if role is not None:
            out = [e for e in out if e.role == role]
        return out

    def validate(self) -> None:
        """Raise if the graph violates a structural invariant."""
        if self.root not in self.nodes:
            raise DanglingVariableReference(f"root {self.root!r} is not a node")
        for var, concepts in self.nodes.items():
            if not concepts:
                raise AmrError(f"node {var!r} has no concept")
        adjacency: dict[str, set[str]] = {v: set() for v in self.nodes}
        for e in self.edges:
            if e.source not in self.nodes:
                raise DanglingVariableReference(f"edge source {e.source!r} is not a node")
            if isinstance(e.target, Var):
                if e.target.name not in self.nodes:
                    raise DanglingVariableReference(
                        f"edge {e.role} references undefined variable {e.target.name!r}"
                    )
                adjacency[e.source].add(e.target.name)
                if e.role.endswith("-of"):
                    adjacency[e.target.name].add(e.source)
        seen = {self.root}
        stack = [self.root]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        missing = set(self.nodes) - seen
        if missing:
            raise UnreachableNode(f"unreachable node(s): {', '.join(sorted(missing))}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AmrGraph):
            return NotImplemented
        return _canonical(self) == _canonical(other)

    def __hash__(self) -> int:
        return hash(_canonical(self))

    def __repr__(self) -> str:
        try:
            return f"AmrGraph({serialize_penman(self)!r})"
        except AmrError:
            return f"AmrGraph(root={self.root!r}, nodes={self.nodes!r}, edges={self.edges!r})"


_OP_ROLE = re.compile(r"^:op\d+$")


def _source_map(graph: AmrGraph) -> dict[str, list[Edge]]:
    out: dict[str, list[Edge]] = {}
    for e in graph.edges:
        out.setdefault(e.source, []).append(e)
    return out


def _canonical(graph: AmrGraph):
    """Name-independent form used for equality and hashing.

    Siblings under :opX keep their written order; all other siblings are
    sorted by role and a name-free shape key, which makes their order a
    multiset property.  Re-entrant references compare by first-visit
    index, so sharing is part of the structure.
    """
    srcmap = _source_map(graph)

    def shape(target, path: frozenset) -> tuple:
        if isinstance(target, Const):
            return ("c", target.token, target.quoted)
        var = target.name
        concepts = graph.nodes[var]
        if var in path:
            return ("r",) + concepts
        deeper = path | {var}
        ops, rest = _split_ops(srcmap.get(var, ()))
        rest = sorted(rest, key=lambda e: (e.role, repr(shape(e.target, deeper))))
        return ("n", concepts, tuple((e.role, shape(e.target, deeper)) for e in ops + rest))

    index: dict[str, int] = {}

    def visit(target) -> tuple:
        if isinstance(target, Const):
            return ("c", target.token, target.quoted)
        var = target.name
        if var in index:
            return ("r", index[var])
        index[var] = len(index)
        ops, rest = _split_ops(srcmap.get(var, ()))
        rest = sorted(rest, key=lambda e: (e.role, repr(shape(e.target, frozenset((var,))))))
        return ("n", graph.nodes[var], tuple((e.role, visit(e.target)) for e in ops + rest))

    return visit(Var(graph.root))


def _split_ops(edges) -> tuple[list[Edge], list[Edge]]:
    ops = [e for e in edges if _OP_ROLE.match(e.role)]
    rest = [e for e in edges if not _OP_ROLE.match(e.role)]
    return ops, rest


# --- lexer ---

_LP, _RP, _SLASH, _ROLE, _ATOM, _STRING = range(6)
_ATOM_BREAK = set("()/~\" \t\r\n")


@dataclass(frozen=True)
class _Token:
    kind: int
    value: str
    pos: int


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str, metadata: dict[str, str]) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    at_line_start = True
    saw_alignment = False
    while i < n:
        ch = text[i]
        if ch == "\n":
            at_line_start = True
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == "#" and at_line_start:
            end = text.find("\n", i)
            end = n if end < 0 else end
            _collect_metadata(text[i:end], metadata)
            i = end
            continue
        at_line_start = False
        if ch == "(":
            tokens.append(_Token(_LP, ch, i))
            i += 1
        elif ch == ")":
            tokens.append(_Token(_RP, ch, i))
            i += 1
        elif ch == "/":
            tokens.append(_Token(_SLASH, ch, i))
            i += 1
        elif ch == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise UnbalancedParens("unterminated string", _byte_offset(text, i))
            tokens.append(_Token(_STRING, text[i + 1:end], i))
            i = end + 1
        elif ch == "~":
            # token alignment marker, e.g. ~e.5,6: not part of the graph
            j = i + 1
            while j < n and text[j] not in _ATOM_BREAK:
                j += 1
            if not saw_alignment:
                warnings.warn("stripping alignment markers from input", stacklevel=3)
                saw_alignment = True
            i = j
        else:
            j = i
            while j < n and text[j] not in _ATOM_BREAK:
                j += 1
            value = text[i:j]
            kind = _ROLE if value.startswith(":") else _ATOM
            tokens.append(_Token(kind, value, i))
            i = j
    return tokens


def _collect_metadata(comment: str, metadata: dict[str, str]) -> None:
    for segment in comment.split("::")[1:]:
        key, _, value = segment.partition(" ")
        if key:
            metadata[key] = value.strip()


# --- parser ---

def parse_penman(text: str) -> AmrGraph:
    """Parse one graph, collecting ``# ::key value`` comments as metadata.

    Variable definitions are gathered in a first pass, so a bare token
    in role position parses as a reference when the variable is defined
    anywhere in the graph (including later), and as a constant otherwise.
    """
    metadata: dict[str, str] = {}
    tokens = _tokenize(text, metadata)
    if not tokens:
        raise EmptyInput("no graph in input", 0)

    defined = set()
    for k in range(len(tokens) - 2):
        if (tokens[k].kind, tokens[k + 1].kind, tokens[k + 2].kind) == (_LP, _ATOM, _SLASH):
            defined.add(tokens[k + 1].value)

    nodes: dict[str, tuple[str, ...]] = {}
    edges: list[Edge] = []
    pos = 0

    def fail(message: str, at: int | None) -> None:
        offset = _byte_offset(text, at) if at is not None else _byte_offset(text, len(text))
        raise UnbalancedParens(message, offset)

    def take() -> _Token | None:
        nonlocal pos
        if pos >= len(tokens):
            return None
        tok = tokens[pos]
        pos += 1
        return tok

    def peek() -> _Token | None:
        return tokens[pos] if pos < len(tokens) else None

    def parse_node() -> str:
        tok = take()
        if tok is None or tok.kind != _LP:
            fail("expected '('", tok.pos if tok else None)
        var_tok = take()
        if var_tok is None or var_tok.kind != _ATOM:
            fail("expected a variable name", var_tok.pos if var_tok else None)
        slash = take()
        if slash is None or slash.kind != _SLASH:
            fail("expected '/' after variable", slash.pos if slash else None)
        concepts = []
        concept_tok = take()
        if concept_tok is None or concept_tok.kind != _ATOM:
            fail("expected a concept", concept_tok.pos if concept_tok else None)
        concepts.append(concept_tok.value)
        while peek() is not None and peek().kind == _SLASH:
            take()
            extra = take()
            if extra is None or extra.kind != _ATOM:
                fail("expected a concept", extra.pos if extra else None)
            concepts.append(extra.value)
        var = var_tok.value
        if var in nodes:
            raise DuplicateVariableDefinition(
                f"variable {var!r} defined twice", _byte_offset(text, var_tok.pos)
            )
        nodes[var] = tuple(concepts)
        while peek() is not None and peek().kind == _ROLE:
            role_tok = take()
            value_tok = peek()
            if value_tok is None:
                fail(f"missing value for role {role_tok.value}", None)
            if value_tok.kind == _LP:
                child = parse_node()
                edges.append(Edge(var, role_tok.value, Var(child)))
            elif value_tok.kind == _ATOM:
                take()
                if value_tok.value in defined:
                    target: Var | Const = Var(value_tok.value)
                else:
                    target = Const(value_tok.value)
                edges.append(Edge(var, role_tok.value, target))
            elif value_tok.kind == _STRING:
                take()
                edges.append(Edge(var, role_tok.value, Const(value_tok.value, quoted=True)))
            else:
                fail(f"expected a value for role {role_tok.value}", value_tok.pos)
        closing = take()
        if closing is None or closing.kind != _RP:
            fail("expected ')'", closing.pos if closing else None)
        return var

    root = parse_node()
    leftover = peek()
    if leftover is not None:
        fail("unexpected content after graph", leftover.pos)
    graph = AmrGraph(root, nodes, edges, metadata)
    graph.validate()
    return graph


def parse_penman_blocks(text: str) -> list[AmrGraph]:
    """Parse a file's worth of graphs separated by blank lines."""
    graphs: list[AmrGraph] = []
    block: list[str] = []

    def flush() -> None:
        if not block:
            return
        chunk = "\n".join(block)
        block.clear()
        if any(not line.lstrip().startswith("#") for line in chunk.splitlines()):
            graphs.append(parse_penman(chunk))

    for line in text.splitlines():
        if line.strip():
            block.append(line)
        else:
            flush()
    flush()
    return graphs


def read_penman_file(path) -> list[AmrGraph]:
    return parse_penman_blocks(Path(path).read_text(encoding="utf-8"))


# --- serializer ---

def serialize_penman(graph: AmrGraph, indent: bool = False) -> str:
    """Write the graph back out, expanding each node at its first mention.

    Edge order is preserved verbatim; later mentions of a variable are
    written bare.  With ``indent`` each role starts a new line indented
    four spaces per depth, which is the layout used in data files.
    """
    if graph.root not in graph.nodes:
        raise DanglingVariableReference(f"root {graph.root!r} is not a node")
    srcmap = _source_map(graph)
    expanded: set[str] = set()

    def fmt_const(c: Const) -> str:
        return f'"{c.token}"' if c.quoted else c.token

    def emit(var: str, depth: int) -> str:
        expanded.add(var)
        head = var + "".join(f" / {c}" for c in graph.nodes[var])
        parts = [head]
        for e in srcmap.get(var, ()):
            if isinstance(e.target, Const):
                value = fmt_const(e.target)
            elif e.target.name in expanded:
                value = e.target.name
            elif e.target.name not in graph.nodes:
                raise DanglingVariableReference(
                    f"edge {e.role} references undefined variable {e.target.name!r}"
                )
            else:
                value = emit(e.target.name, depth + 1)
            parts.append(f"{e.role} {value}")
        sep = "\n" + "    " * (depth + 1) if indent else " "
        return "(" + sep.join(parts) + ")"

    text = emit(graph.root, 0)
    missing = set(graph.nodes) - expanded
    if missing:
        raise UnreachableNode(f"unreachable node(s): {', '.join(sorted(missing))}")
    return text


# --- edits ---

def unknown_count(graph: AmrGraph) -> int:
    return sum(1 for concepts in graph.nodes.values() if "amr-unknown" in concepts)


def fresh_var(taken, concept: str) -> str:
    """Pick an unused variable name: concept initial, then initial2, 3..."""
    initial = next((ch for ch in concept.lower() if ch.isalpha()), "x")
    if initial not in taken:
        return initial
    k = 2
    while f"{initial}{k}" in taken:
        k += 1
    return f"{initial}{k}"


def subgraph(graph: AmrGraph, var: str) -> AmrGraph:
    """Detached copy of the closure below ``var`` (written direction)."""
    if var not in graph.nodes:
        raise DanglingVariableReference(f"{var!r} is not a node")
    srcmap = _source_map(graph)
    keep: set[str] = set()
    stack = [var]
    while stack:
        cur = stack.pop()
        if cur in keep:
            continue
        keep.add(cur)
        for e in srcmap.get(cur, ()):
            if isinstance(e.target, Var):
                stack.append(e.target.name)
    nodes = {v: c for v, c in graph.nodes.items() if v in keep}
    edges = [e for e in graph.edges if e.source in keep]
    return AmrGraph(var, nodes, edges)


def path_to(graph: AmrGraph, var: str) -> GraphPath | None:
    """Leftmost edge path from the root down to ``var``.

    Occurrence counters follow written edge order, so the result stays
    valid as long as the edges above ``var`` are not reordered.  Returns
    None for the root itself and for nodes only reachable against edge
    direction.
    """
    if var not in graph.nodes:
        raise DanglingVariableReference(f"{var!r} is not a node")

    def walk(cur: str, steps: tuple, seen: frozenset) -> tuple | None:
        counts: dict[str, int] = {}
        for e in graph.out_edges(cur):
            occ = counts.get(e.role, 0)
            counts[e.role] = occ + 1
            if not isinstance(e.target, Var):
                continue
            nxt = steps + ((e.role, occ),)
            if e.target.name == var:
                return nxt
            if e.target.name not in seen:
                found = walk(e.target.name, nxt, seen | {e.target.name})
                if found is not None:
                    return found
        return None

    steps = walk(graph.root, (), frozenset({graph.root}))
    return GraphPath(steps) if steps is not None else None


def _reachable(graph: AmrGraph, skip_edge: int | None = None) -> set[str]:
    srcmap: dict[str, list[tuple[int, Edge]]] = {}
    for i, e in enumerate(graph.edges):
        srcmap.setdefault(e.source, []).append((i, e))
    keep: set[str] = set()
    stack = [graph.root]
    while stack:
        cur = stack.pop()
        if cur in keep:
            continue
        keep.add(cur)
        for i, e in srcmap.get(cur, ()):
            if i != skip_edge and isinstance(e.target, Var):
                stack.append(e.target.name)
    return keep


def _gc(graph: AmrGraph) -> None:
    """Drop nodes no longer reachable from the root, and their edges."""
    keep = _reachable(graph)
    graph.nodes = {v: c for v, c in graph.nodes.items() if v in keep}
    graph.edges = [e for e in graph.edges if e.source in keep]


def _resolve_path(graph: AmrGraph, path: GraphPath) -> int:
    if not path.steps:
        raise PathNotFound("empty path")
    current = graph.root
    index = -1
    for role, occurrence in path.steps:
        same = [i for i, e in enumerate(graph.edges) if e.source == current and e.role == role]
        if occurrence >= len(same):
            raise PathNotFound(f"no {role} occurrence {occurrence} under {current!r}")
        index = same[occurrence]
        target = graph.edges[index].target
        current = target.name if isinstance(target, Var) else None
    return index


def replace_with_unknown(graph: AmrGraph, path: GraphPath) -> tuple[AmrGraph, AmrGraph]:
    """Swap the subgraph at ``path`` for amr-unknown.

    Returns (question graph, answer graph).  The answer is the detached
    subgraph that was replaced; a constant value becomes a single-node
    graph whose concept is the token.  The input graph is not modified.
    """
    index = _resolve_path(graph, path)
    edge = graph.edges[index]
    if edge.role == ":mode":
        raise PathTargetsConstant(":mode carries a modal constant, not content")
    if isinstance(edge.target, Const):
        token = edge.target.token
        var = next((ch for ch in token.lower() if ch.isalpha()), "x")
        answer = AmrGraph(var, {var: (token,)}, [])
    else:
        answer = subgraph(graph, edge.target.name)
    question = graph.copy()
    unknown = fresh_var(set(question.nodes), "amr-unknown")
    question.nodes[unknown] = ("amr-unknown",)
    question.edges[index] = Edge(edge.source, edge.role, Var(unknown))
    _gc(question)
    question.validate()
    if unknown_count(question) != 1:
        raise AmrError("edit must leave exactly one amr-unknown in the question graph")
    return question, answer


def graft_subgraph(graph: AmrGraph, path: GraphPath, donor: AmrGraph) -> AmrGraph:
    """Replace the subgraph at ``path`` with a copy of ``donor``.

    Donor variables that collide with surviving host variables get a
    ``_2``, ``_3``, ... suffix.  The input graphs are not modified.
    """
    donor.validate()
    index = _resolve_path(graph, path)
    edge = graph.edges[index]
    keep = _reachable(graph, skip_edge=index)
    if edge.source not in keep:
        raise AmrError("graft point is only reachable through the replaced subgraph")

    taken = set(keep)
    mapping: dict[str, str] = {}
    for var in donor.nodes:
        if var in taken:
            k = 2
            while f"{var}_{k}" in taken or f"{var}_{k}" in donor.nodes:
                k += 1
            mapping[var] = f"{var}_{k}"
        else:
            mapping[var] = var
        taken.add(mapping[var])

    def remap(target):
        return Var(mapping[target.name]) if isinstance(target, Var) else target

    nodes = {v: c for v, c in graph.nodes.items() if v in keep}
    edges: list[Edge] = []
    for i, e in enumerate(graph.edges):
        if e.source not in keep:
            continue
        if i == index:
            edges.append(Edge(e.source, e.role, Var(mapping[donor.root])))
        elif isinstance(e.target, Var) and e.target.name not in keep:
            continue
        else:
            edges.append(e)
    for v, c in donor.nodes.items():
        nodes[mapping[v]] = c
    for e in donor.edges:
        edges.append(Edge(mapping[e.source], e.role, remap(e.target)))
    result = AmrGraph(graph.root, nodes, edges, dict(graph.metadata))
    result.validate()
    return result


def remove_roles(graph: AmrGraph, keep) -> AmrGraph:
    """Drop top-level roles not listed in ``keep``, then garbage collect.

    Only edges leaving the root are affected; nodes still referenced
    from a surviving subgraph stay put.
    """
    keep_set = {str(r) for r in keep}
    out = graph.copy()
    out.edges = [e for e in out.edges if e.source != out.root or e.role in keep_set]
    _gc(out)
    out.validate()
    return out
