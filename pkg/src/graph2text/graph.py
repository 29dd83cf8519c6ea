"""Value types for AMR graphs, knowledge graphs and benchmark samples."""

from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional, Union

SPLITS = ("train", "dev", "test")

# Relations that end in "-of" but are not inverses of another role.
_NON_INVERSE_OF = frozenset({":consist-of"})


@dataclass(frozen=True)
class AmrGraph:
    """Rooted, directed, labeled concept graph.

    ``nodes`` holds ``(node_id, concept)`` pairs, ``edges`` holds
    ``(source, relation, target)`` triples between nodes and
    ``attributes`` holds ``(node_id, relation, constant)`` triples whose
    value is a literal (number, ``-``, quoted string, ...). Constants are
    not nodes and do not count toward the node total.
    """

    root: str
    nodes: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str, str], ...] = ()
    attributes: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(tuple(n) for n in self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "attributes", tuple(tuple(a) for a in self.attributes))

    @property
    def concepts(self) -> dict[str, str]:
        return dict(self.nodes)

    def relations(self) -> set[str]:
        return {r for _, r, _ in self.edges} | {r for _, r, _ in self.attributes}


@dataclass(frozen=True)
class KgTriple:
    head: str
    relation: str
    tail: str

    def __post_init__(self):
        for name in ("head", "relation", "tail"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ValueError(f"triple {name} must be a non-empty string, got {value!r}")

    def __iter__(self):
        return iter((self.head, self.relation, self.tail))


@dataclass(frozen=True)
class KnowledgeGraph:
    """Entity set plus relation triples, optionally with a document title.

    Every head and tail must be listed in ``entities``; the entity list may
    hold extra entries (AGENDA lists all extracted entities).
    """

    entities: tuple[str, ...]
    triples: tuple[KgTriple, ...]
    title: Optional[str] = None

    def __post_init__(self):
        triples = tuple(t if isinstance(t, KgTriple) else KgTriple(*t) for t in self.triples)
        object.__setattr__(self, "triples", triples)
        object.__setattr__(self, "entities", tuple(self.entities))
        dupes = [e for e, c in Counter(self.entities).items() if c > 1]
        if dupes:
            raise ValueError(f"duplicate entities: {dupes}")
        known = set(self.entities)
        for t in triples:
            for ent in (t.head, t.tail):
                if ent not in known:
                    raise ValueError(f"triple entity {ent!r} missing from entity list")

    @classmethod
    def from_triples(cls, triples, title=None) -> KnowledgeGraph:
        """Build a graph whose entity list is the heads and tails in first-seen order."""
        triples = [t if isinstance(t, KgTriple) else KgTriple(*t) for t in triples]
        entities = list(dict.fromkeys(e for t in triples for e in (t.head, t.tail)))
        return cls(entities=tuple(entities), triples=tuple(triples), title=title)

    def relations(self) -> set[str]:
        return {t.relation for t in self.triples}


Graph = Union[AmrGraph, KnowledgeGraph]


@dataclass(frozen=True)
class Sample:
    id: str
    payload: Graph
    references: tuple[str, ...]
    split: str = "train"
    category: Optional[str] = None
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "references", tuple(self.references))
        if not self.references:
            raise ValueError(f"sample {self.id!r} has no references")
        if self.split not in SPLITS:
            raise ValueError(f"sample {self.id!r} has unknown split {self.split!r}")


def validate_amr(g: AmrGraph) -> list[str]:
    """Return one description per violated invariant; empty means well formed."""
    problems = []
    ids = [n for n, _ in g.nodes]
    for node_id, count in Counter(ids).items():
        if count > 1:
            problems.append(f"duplicate node id {node_id}")
    declared = set(ids)
    if g.root not in declared:
        problems.append(f"root {g.root} undeclared")

    adjacency = defaultdict(set)
    for src, rel, tgt in g.edges:
        if src not in declared:
            problems.append(f"edge source {src} undeclared")
        if tgt not in declared:
            problems.append(f"edge target {tgt} undeclared")
        if not rel or not rel.startswith(":") or len(rel) < 2:
            problems.append(f"edge {src} {rel!r} {tgt} has malformed relation label")
        adjacency[src].add(tgt)
        adjacency[tgt].add(src)
    for owner, rel, value in g.attributes:
        if owner not in declared:
            problems.append(f"attribute owner {owner} undeclared")
        if not rel or not rel.startswith(":") or len(rel) < 2:
            problems.append(f"attribute {owner} {rel!r} has malformed relation label")
        if not value:
            problems.append(f"attribute {owner} {rel} has empty value")

    if g.root in declared:
        seen = {g.root}
        queue = deque([g.root])
        while queue:
            for nxt in adjacency[queue.popleft()]:
                if nxt in declared and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        for node_id in dict.fromkeys(ids):
            if node_id not in seen:
                problems.append(f"node {node_id} unreachable from root")
    return problems


def graph_order(g: Graph) -> tuple[int, int]:
    """(node count, edge count) for AMR; (entity count, triple count) for KGs."""
    if isinstance(g, KnowledgeGraph):
        return len(g.entities), len(g.triples)
    return len(g.nodes), len(g.edges)


def normalize_edge(src: str, rel: str, tgt: str) -> tuple[str, str, str]:
    """Rewrite an inverted role ``(a, :X-of, b)`` as ``(b, :X, a)``."""
    if rel.endswith("-of") and rel not in _NON_INVERSE_OF and not rel.startswith(":prep-"):
        return tgt, rel[: -len("-of")], src
    return src, rel, tgt


def isomorphic(a: AmrGraph, b: AmrGraph) -> bool:
    """Rooted labeled isomorphism, treating inverse roles as their normal form."""
    import networkx as nx

    if graph_order(a) != graph_order(b) or len(a.attributes) != len(b.attributes):
        return False

    def build(g):
        attrs = defaultdict(list)
        for owner, rel, value in g.attributes:
            attrs[owner].append((rel, value))
        nxg = nx.MultiDiGraph()
        for node_id, concept in g.nodes:
            nxg.add_node(node_id, label=(concept, tuple(sorted(attrs[node_id])), node_id == g.root))
        for edge in g.edges:
            src, rel, tgt = normalize_edge(*edge)
            nxg.add_edge(src, tgt, rel=rel)
        return nxg

    def edge_match(e1, e2):
        return sorted(d["rel"] for d in e1.values()) == sorted(d["rel"] for d in e2.values())

    return nx.is_isomorphic(
        build(a), build(b), node_match=lambda x, y: x["label"] == y["label"], edge_match=edge_match
    )
