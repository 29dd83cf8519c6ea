"""Knowledge-graph linearization, input shuffling and fact corruption."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidGraph, MalformedSequence, MissingTitle
from .graph import KgTriple, KnowledgeGraph

HEAD_TAG = "⟨H⟩"
RELATION_TAG = "⟨R⟩"
TAIL_TAG = "⟨T⟩"
NEUTRAL_SEPARATOR = "⋅"
T5_PREFIX = "translate from Graph to Text: "


@dataclass(frozen=True)
class LinearizationScheme:
    mode: str = "tagged"  # tagged | neutral
    head_tag: str = HEAD_TAG
    relation_tag: str = RELATION_TAG
    tail_tag: str = TAIL_TAG
    separator: str = NEUTRAL_SEPARATOR
    prefix: Optional[str] = None

    def __post_init__(self):
        if self.mode not in ("tagged", "neutral"):
            raise ValueError(f"unknown linearization mode {self.mode!r}")
        markers = [self.head_tag, self.relation_tag, self.tail_tag, self.separator]
        if not all(m and m.strip() for m in markers):
            raise ValueError("tags and separator must be non-empty")
        if self.mode == "tagged" and len(set(markers)) != len(markers):
            raise ValueError("tags and separator must be pairwise distinct in tagged mode")

    @classmethod
    def neutral(cls, **kwargs) -> LinearizationScheme:
        return cls(mode="neutral", **kwargs)

    @classmethod
    def t5(cls, mode: str = "tagged", **kwargs) -> LinearizationScheme:
        return cls(mode=mode, prefix=T5_PREFIX, **kwargs)

    @property
    def tags(self) -> tuple[str, str, str]:
        if self.mode == "neutral":
            return (self.separator,) * 3
        return self.head_tag, self.relation_tag, self.tail_tag

    def prefix_tokens(self) -> list[str]:
        return self.prefix.split() if self.prefix else []

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "head_tag": self.head_tag,
            "relation_tag": self.relation_tag,
            "tail_tag": self.tail_tag,
            "separator": self.separator,
            "prefix": self.prefix,
        }


@dataclass(frozen=True)
class LinearizedSample:
    input_tokens: tuple[str, ...]
    target_text: str
    scheme: LinearizationScheme
    sample_id: str
    transforms: tuple[str, ...] = ("order",)
    references: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "input_tokens", tuple(self.input_tokens))
        object.__setattr__(self, "transforms", tuple(self.transforms))
        object.__setattr__(self, "references", tuple(self.references) or (self.target_text,))
        if not self.input_tokens:
            raise ValueError(f"sample {self.sample_id!r} linearized to an empty input")
        if not self.transforms:
            raise ValueError("provenance chain must be non-empty")

    @property
    def provenance(self) -> str:
        return f"{self.sample_id}:" + "+".join(self.transforms)

    def to_json(self) -> dict:
        return {
            "id": self.sample_id,
            "input": " ".join(self.input_tokens),
            # Quoted AMR literals may contain spaces, so the exact tokens are kept too.
            "tokens": list(self.input_tokens),
            "target": self.target_text,
            "references": list(self.references),
            "transforms": list(self.transforms),
            "scheme": self.scheme.to_dict(),
        }

    @classmethod
    def from_json(cls, record: dict) -> LinearizedSample:
        return cls(
            input_tokens=record["tokens"] if "tokens" in record else record["input"].split(),
            target_text=record["target"],
            scheme=LinearizationScheme(**record.get("scheme", {})),
            sample_id=record["id"],
            transforms=record.get("transforms", ["order"]),
            references=record.get("references", ()),
        )


def _triple_tokens(triples: Sequence[KgTriple], scheme: LinearizationScheme) -> list[str]:
    head_tag, rel_tag, tail_tag = scheme.tags
    tokens = []
    for t in triples:
        tokens.append(head_tag)
        tokens.extend(t.head.split())
        tokens.append(rel_tag)
        tokens.extend(t.relation.split())
        tokens.append(tail_tag)
        tokens.extend(t.tail.split())
    return tokens


def _entity_tokens(entities: Sequence[str], separator: str) -> list[str]:
    tokens = []
    for i, ent in enumerate(entities):
        if i:
            tokens.append(separator)
        tokens.extend(ent.split())
    return tokens


def linearize_kg(g: KnowledgeGraph, scheme: LinearizationScheme = LinearizationScheme()) -> list[str]:
    """Flatten triples into ``tag head tag relation tag tail`` runs.

    With no triples the title (or, failing that, the separator-joined
    entity list) stands in for the graph.
    """
    tokens = scheme.prefix_tokens()
    if g.triples:
        return tokens + _triple_tokens(g.triples, scheme)
    if g.title and g.title.strip():
        return tokens + g.title.split()
    if g.entities:
        return tokens + _entity_tokens(g.entities, scheme.separator)
    raise InvalidGraph("graph has no triples, title or entities to linearize")


def build_agenda_input(g: KnowledgeGraph, scheme: LinearizationScheme = LinearizationScheme()) -> list[str]:
    """Title, then the separator-joined entity list, then the tagged triples."""
    if not g.title or not g.title.strip():
        raise MissingTitle("AGENDA-style input needs a title")
    return (
        scheme.prefix_tokens()
        + g.title.split()
        + _entity_tokens(g.entities, scheme.separator)
        + _triple_tokens(g.triples, scheme)
    )


def split_units(tokens: Sequence[str], separator: str = NEUTRAL_SEPARATOR) -> list[list[str]]:
    """Cut a neutral-separator sequence into its label runs."""
    if not tokens or tokens[0] != separator:
        raise MalformedSequence(f"sequence must start with separator {separator!r}")
    units: list[list[str]] = []
    for tok in tokens:
        if tok == separator:
            if units and not units[-1]:
                raise MalformedSequence("two separators without a label between them")
            units.append([])
        else:
            units[-1].append(tok)
    if not units[-1]:
        raise MalformedSequence("sequence ends with a separator")
    return units


def join_units(units: Sequence[Sequence[str]], separator: str = NEUTRAL_SEPARATOR) -> list[str]:
    out = []
    for unit in units:
        out.append(separator)
        out.extend(unit)
    return out


def shuffle_kg(
    tokens: Sequence[str],
    granularity: str = "unit",
    seed: int = 0,
    separator: str = NEUTRAL_SEPARATOR,
) -> list[str]:
    """Permute a neutral-separator linearization.

    ``unit`` permutes individual labels (multi-word labels move whole),
    which erases triple grouping; ``triple`` permutes whole triples and
    keeps each one intact.
    """
    units = split_units(tokens, separator)
    rng = np.random.default_rng(seed)
    if granularity == "unit":
        return join_units([units[i] for i in rng.permutation(len(units))], separator)
    if granularity == "triple":
        if len(units) % 3:
            raise MalformedSequence(f"{len(units)} labels do not form whole triples")
        triples = [units[i : i + 3] for i in range(0, len(units), 3)]
        shuffled = [triples[i] for i in rng.permutation(len(triples))]
        return join_units([u for triple in shuffled for u in triple], separator)
    raise ValueError(f"unknown shuffle granularity {granularity!r}")


def corrupt_swap(t: KgTriple) -> KgTriple:
    return KgTriple(t.tail, t.relation, t.head)


def corrupt_case(t: KgTriple) -> KgTriple:
    return KgTriple(t.head.lower(), t.relation, t.tail.lower())


def corrupt_graph(g: KnowledgeGraph, kind: str) -> KnowledgeGraph:
    fns = {"swap": corrupt_swap, "case": corrupt_case}
    if kind not in fns:
        raise ValueError(f"unknown corruption {kind!r}")
    fn = fns[kind]
    triples = [fn(t) for t in g.triples]
    if kind == "swap":
        entities = g.entities
    else:
        entities = list(dict.fromkeys([e.lower() for e in g.entities]))
    return KnowledgeGraph(entities=entities, triples=triples, title=g.title)
