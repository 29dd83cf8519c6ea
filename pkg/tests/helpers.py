"""Random graph generators shared by the property tests."""

from __future__ import annotations

import numpy as np

from graph2text.graph import AmrGraph, KgTriple, KnowledgeGraph

CONCEPTS = ["want-01", "boy", "go-02", "city", "name", "person", "believe-01", "girl", "see-01", "thing", "and"]
ROLES = [":ARG0", ":ARG1", ":ARG2", ":mod", ":location", ":ARG0-of", ":ARG1-of", ":op1", ":consist-of", ":poss"]
CONSTANTS = ["-", "+", "5", "2.5", '"Ohio"', '"New York"', "imperative"]
ATTR_ROLES = [":polarity", ":quant", ":op1", ":mode", ":value"]


def random_amr(rng: np.random.Generator, max_nodes: int = 20, reentrancy: float = 0.3) -> AmrGraph:
    """Connected AMR graph: random spanning tree, random edge directions, extra reentrant edges."""
    n = int(rng.integers(1, max_nodes + 1))
    letters = "abcdefghijklmnopqrstuvwxyz"
    ids = [f"{letters[i % 26]}{i // 26 if i >= 26 else ''}" for i in rng.permutation(max(n, 26))[:n]]
    nodes = [(v, CONCEPTS[int(rng.integers(len(CONCEPTS)))]) for v in ids]
    edges = []
    for i in range(1, n):
        parent = ids[int(rng.integers(i))]
        role = ROLES[int(rng.integers(len(ROLES)))]
        edges.append((parent, role, ids[i]) if rng.random() < 0.8 else (ids[i], role, parent))
    for i in range(n):
        if n > 1 and rng.random() < reentrancy:
            j = int(rng.integers(n - 1))
            j += j >= i
            edges.append((ids[i], ROLES[int(rng.integers(len(ROLES)))], ids[j]))
    attributes = []
    for v in ids:
        if rng.random() < 0.2:
            attributes.append(
                (v, ATTR_ROLES[int(rng.integers(len(ATTR_ROLES)))], CONSTANTS[int(rng.integers(len(CONSTANTS)))])
            )
    order = rng.permutation(len(edges))
    return AmrGraph(root=ids[0], nodes=nodes, edges=[edges[k] for k in order], attributes=attributes)


ENTITY_WORDS = ["Italy", "Rome", "Alan", "Bean", "Ohio", "Cleveland", "Texas", "Wheeler", "NASA", "Apollo"]
RELATION_WORDS = ["capital", "is", "part", "of", "birth", "place", "occupation", "leader", "country"]


def random_kg(rng: np.random.Generator, max_triples: int = 8) -> KnowledgeGraph:
    """KG with multi-word labels; labels never contain the neutral separator."""

    def label(words):
        k = int(rng.integers(1, 4))
        return " ".join(words[int(rng.integers(len(words)))] for _ in range(k))

    n = int(rng.integers(1, max_triples + 1))
    pool = list(dict.fromkeys(label(ENTITY_WORDS) for _ in range(n + 2)))
    triples = [
        KgTriple(pool[int(rng.integers(len(pool)))], label(RELATION_WORDS), pool[int(rng.integers(len(pool)))])
        for _ in range(n)
    ]
    return KnowledgeGraph.from_triples(triples)
