"""PENMAN reading and writing, AMR linearization and structure ablations."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidGraph, ParseError
from .graph import AmrGraph, normalize_edge, validate_amr

# Unquoted bare symbols shaped like AMR variables must be declared somewhere.
VARIABLE_RE = re.compile(r"^[a-z][0-9]*$")
PARENS = ("(", ")")

_DELIMITERS = set('()/"') | {" ", "\t", "\n", "\r"}


@dataclass(frozen=True)
class PenmanToken:
    kind: str  # lparen, rparen, slash, variable, concept, relation, constant
    text: str
    offset: int


def _lex(text: str) -> list[PenmanToken]:
    # First pass: kinds are structural only; symbols get "symbol".
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "(":
            tokens.append(PenmanToken("lparen", ch, i))
            i += 1
        elif ch == ")":
            tokens.append(PenmanToken("rparen", ch, i))
            i += 1
        elif ch == "/":
            tokens.append(PenmanToken("slash", ch, i))
            i += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            if j >= n:
                raise ParseError("unterminated string literal", i, 'closing "')
            tokens.append(PenmanToken("string", text[i : j + 1], i))
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in _DELIMITERS:
                j += 1
            word = text[i:j]
            kind = "relation" if word.startswith(":") and len(word) > 1 else "symbol"
            tokens.append(PenmanToken(kind, word, i))
            i = j
    return tokens


def tokenize(text: str) -> list[PenmanToken]:
    """Lex PENMAN text into typed tokens.

    Bare symbols are typed from context: after ``(`` a variable, after
    ``/`` a concept, after a relation a variable if the symbol is declared
    anywhere in the text and a constant otherwise.
    """
    raw = _lex(text)
    declared = {
        raw[k + 1].text
        for k in range(len(raw) - 1)
        if raw[k].kind == "lparen" and raw[k + 1].kind == "symbol"
    }
    typed = []
    prev = None
    for tok in raw:
        kind = tok.kind
        if kind == "string":
            kind = "concept" if prev == "slash" else "constant"
        elif kind == "symbol":
            if prev == "lparen":
                kind = "variable"
            elif prev == "slash":
                kind = "concept"
            else:
                kind = "variable" if tok.text in declared else "constant"
        typed.append(PenmanToken(kind, tok.text, tok.offset))
        prev = tok.kind
    return typed


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0
        self.declared = {
            self.tokens[k + 1].text
            for k in range(len(self.tokens) - 1)
            if self.tokens[k].kind == "lparen" and self.tokens[k + 1].kind == "symbol"
        }
        self.nodes: list[tuple[str, str]] = []
        self.edges: list[tuple[str, str, str]] = []
        self.attributes: list[tuple[str, str, str]] = []
        self.seen: set[str] = set()

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def offset(self) -> int:
        tok = self.peek()
        return tok.offset if tok else len(self.text)

    def expect(self, kind: str, expected: str) -> PenmanToken:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = "end of input" if tok is None else repr(tok.text)
            raise ParseError(f"unexpected {found}", self.offset(), expected)
        self.pos += 1
        return tok

    def parse(self) -> AmrGraph:
        if not self.tokens:
            raise ParseError("empty input", 0, "(")
        root = self.node()
        if self.peek() is not None:
            raise ParseError(f"trailing {self.peek().text!r}", self.offset(), "end of input")
        return AmrGraph(root=root, nodes=self.nodes, edges=self.edges, attributes=self.attributes)

    def node(self) -> str:
        self.expect("lparen", "(")
        var_tok = self.expect("symbol", "variable")
        var = var_tok.text
        if var in self.seen:
            raise ParseError(f"variable {var} declared twice", var_tok.offset)
        self.seen.add(var)
        self.expect("slash", "/")
        tok = self.peek()
        if tok is None or tok.kind not in ("symbol", "string"):
            raise ParseError("missing concept", self.offset(), "concept")
        self.pos += 1
        self.nodes.append((var, tok.text))
        while (tok := self.peek()) is not None and tok.kind == "relation":
            self.pos += 1
            rel = tok.text
            target = self.peek()
            if target is None:
                raise ParseError("unexpected end of input", len(self.text), "node or constant")
            if target.kind == "lparen":
                slot = len(self.edges)
                self.edges.append(None)
                self.edges[slot] = (var, rel, self.node())
            elif target.kind == "string":
                self.pos += 1
                self.attributes.append((var, rel, target.text))
            elif target.kind == "symbol":
                self.pos += 1
                if target.text in self.declared:
                    self.edges.append((var, rel, target.text))
                elif VARIABLE_RE.match(target.text):
                    raise ParseError(f"variable {target.text} is never declared", target.offset)
                else:
                    self.attributes.append((var, rel, target.text))
            else:
                raise ParseError(f"unexpected {target.text!r}", target.offset, "node or constant")
        self.expect("rparen", ")")
        return var


def parse_penman(text: str) -> AmrGraph:
    """Parse one PENMAN graph.

    Re-mentions of a variable (anywhere, including before its declaration)
    become edges to the existing node; unquoted symbols that look like a
    variable but are never declared raise :class:`ParseError`.
    """
    return _Parser(text).parse()


def _emission_plan(g: AmrGraph) -> dict[str, list[tuple[int, str, str]]]:
    """Assign every edge to the node it is printed under.

    Edges are printed at their source unless the source is only reachable
    against edge direction, in which case they are printed inverted at the
    target. Returns node -> [(edge index, printed relation, other node)].
    """
    out_edges = defaultdict(list)
    for idx, (src, _, tgt) in enumerate(g.edges):
        out_edges[src].append((idx, tgt))

    reached: set[str] = set()

    def expand(start):
        stack = [start]
        reached.add(start)
        while stack:
            for _, tgt in out_edges[stack.pop()]:
                if tgt not in reached:
                    reached.add(tgt)
                    stack.append(tgt)

    expand(g.root)
    inverted = set()
    while len(reached) < len(g.nodes):
        for idx, (src, _, tgt) in enumerate(g.edges):
            if tgt in reached and src not in reached:
                inverted.add(idx)
                expand(src)
                break
        else:  # pragma: no cover - excluded by validation
            raise InvalidGraph("graph is disconnected")

    plan = defaultdict(list)
    for idx, (src, rel, tgt) in enumerate(g.edges):
        if idx in inverted:
            plan[tgt].append((idx, invert_relation(rel), src))
        else:
            plan[src].append((idx, rel, tgt))
    for branches in plan.values():
        branches.sort()
    return plan


def invert_relation(rel: str) -> str:
    src, norm, _ = normalize_edge("a", rel, "b")
    if src == "b":
        return norm
    return rel + "-of"


def serialize_penman(g: AmrGraph) -> str:
    """Deterministic single-line PENMAN rendering.

    Depth-first from the root; a node's attributes come first, then its
    edges in stored order. A node's concept is printed at its first mention,
    later mentions print the bare variable.
    """
    problems = validate_amr(g)
    if problems:
        raise InvalidGraph("; ".join(problems))
    concepts = g.concepts
    attrs = defaultdict(list)
    for owner, rel, value in g.attributes:
        attrs[owner].append((rel, value))
    plan = _emission_plan(g)
    printed: set[str] = set()
    parts: list[str] = []

    def emit(var):
        printed.add(var)
        parts.append(f"({var} / {concepts[var]}")
        for rel, value in attrs[var]:
            parts.append(f" {rel} {value}")
        for _, rel, other in plan[var]:
            parts.append(f" {rel} ")
            if other in printed:
                parts.append(other)
            else:
                emit(other)
        parts.append(")")

    emit(g.root)
    return "".join(parts)


def linearize_amr(g: AmrGraph) -> list[str]:
    """Token sequence of the PENMAN rendering; parentheses are separate tokens."""
    return [tok.text for tok in tokenize(serialize_penman(g))]


def strip_structure(tokens: Iterable[str]) -> list[str]:
    return [t for t in tokens if t not in PARENS]


def shuffle_labels(tokens: Iterable[str], seed: int) -> list[str]:
    """Seeded uniform permutation of a token sequence."""
    tokens = list(tokens)
    order = np.random.default_rng(seed).permutation(len(tokens))
    return [tokens[i] for i in order]


def read_sidecar(lines: Iterable[str]) -> Iterator[tuple[int, dict, str]]:
    """Split AMR release text into ``(first line number, metadata, penman)`` blocks.

    Blocks are separated by blank lines; ``# ::key value`` comment lines
    become metadata (several keys may share one line).
    """
    meta: dict = {}
    graph_lines: list[str] = []
    start = None
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            if graph_lines or meta:
                yield start, meta, " ".join(graph_lines)
            meta, graph_lines, start = {}, [], None
            continue
        if start is None:
            start = lineno
        if line.lstrip().startswith("#"):
            body = line.lstrip()[1:].strip()
            if body.startswith("::"):
                for chunk in body[2:].split(" ::"):
                    key, _, value = chunk.strip().partition(" ")
                    if key:
                        meta[key] = value.strip()
        else:
            graph_lines.append(line.strip())
    if graph_lines or meta:
        yield start, meta, " ".join(graph_lines)


def format_sidecar(meta: dict, g: AmrGraph) -> str:
    lines = [f"# ::{key} {value}" for key, value in meta.items()]
    lines.append(serialize_penman(g))
    return "\n".join(lines) + "\n"
