"""Synthetic directional facts where direction is lost in a bag of labels."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..graph import KgTriple, KnowledgeGraph, Sample
from ..metrics import tokenize

RELATION = "is part of"
_ONSETS = ["B", "D", "F", "G", "K", "L", "M", "N", "P", "R", "S", "T", "V", "Z"]
_VOWELS = ["a", "e", "i", "o", "u"]
_CODAS = ["n", "r", "l", "s", "m", "d", "k", "x", "t", "v"]


def entity_names(n: int) -> list[str]:
    """``n`` distinct pronounceable single-token names, fixed for a given ``n``."""
    names = []
    for onset, v1, coda, v2 in itertools.product(_ONSETS, _VOWELS, _CODAS, _VOWELS):
        names.append(f"{onset}{v1}{coda}{v2}")
        if len(names) == n:
            return names
    raise ValueError(f"at most {len(names)} entity names available")


def gen_directional_facts(
    n_samples: int, n_entities: int, seed: int, split: str = "train", id_prefix: str = ""
) -> list[Sample]:
    """Single-triple KGs ``(X, is part of, Y)`` with text ``"X is part of Y."``.

    Facts are emitted in mirrored pairs: whenever ``(X, Y)`` appears,
    ``(Y, X)`` appears too, so a bag of the three labels cannot reveal the
    direction. Odd ``n_samples`` repeats one already mirrored fact.
    """
    if n_entities < 4:
        raise ValueError("need at least 4 entities")
    if n_samples < 1:
        return []
    names = entity_names(n_entities)
    rng = np.random.default_rng(seed)
    n_pairs = (n_samples + 1) // 2
    pairs = []
    for _ in range(n_pairs):
        a, b = rng.choice(n_entities, size=2, replace=False)
        pairs.append((int(a), int(b)))
    facts = [f for a, b in pairs for f in ((a, b), (b, a))][: n_samples - n_samples % 2]
    if n_samples % 2:
        # With n_samples == 1 there is no room for the mirror image.
        facts.append(facts[int(rng.integers(len(facts)))] if facts else pairs[0])
    order = rng.permutation(len(facts))
    samples = []
    for k, idx in enumerate(order):
        head, tail = names[facts[idx][0]], names[facts[idx][1]]
        samples.append(
            Sample(
                id=f"{id_prefix}{split}-{k}",
                payload=KnowledgeGraph.from_triples([KgTriple(head, RELATION, tail)]),
                references=[f"{head} {RELATION} {tail}."],
                split=split,
            )
        )
    return samples


def directional_splits(n_train, n_dev, n_test, n_entities, seed) -> dict[str, list[Sample]]:
    """Independent train/dev/test corpora over one shared entity pool."""
    seeds = np.random.SeedSequence(seed).spawn(3)
    sizes = {"train": n_train, "dev": n_dev, "test": n_test}
    return {
        split: gen_directional_facts(n, n_entities, int(ss.generate_state(1)[0]), split=split)
        for (split, n), ss in zip(sizes.items(), seeds)
    }


def direction_correct(generated: str, head: str, tail: str, relation: str = RELATION) -> bool:
    """True iff the head occurs before and the tail after the relation phrase."""
    tokens = tokenize(generated)
    rel = tokenize(relation)
    for i in range(len(tokens) - len(rel) + 1):
        if tokens[i : i + len(rel)] == rel:
            return head in tokens[:i] and tail in tokens[i + len(rel) :]
    return False


def direction_accuracy(generated: Sequence[str], triples: Sequence[KgTriple]) -> float:
    if not generated:
        return 0.0
    hits = sum(direction_correct(text, t.head, t.tail, t.relation) for text, t in zip(generated, triples))
    return hits / len(generated)
