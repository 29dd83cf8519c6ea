import numpy as np
import pytest

from graph2text.kg import LinearizationScheme, linearize_kg, shuffle_kg
from graph2text.toy.synth import (
    direction_accuracy,
    direction_correct,
    directional_splits,
    entity_names,
    gen_directional_facts,
)


def _pairs(samples):
    return [(s.payload.triples[0].head, s.payload.triples[0].tail) for s in samples]


def test_every_pair_has_its_reverse():
    pairs = _pairs(gen_directional_facts(1000, 12, 0))
    present = set(pairs)
    assert all((t, h) in present for h, t in pairs)


def test_size_and_direction_balance():
    samples = gen_directional_facts(1000, 12, 0)
    assert len(samples) == 1000
    names = entity_names(12)
    forward = sum(names.index(h) < names.index(t) for h, t in _pairs(samples))
    assert abs(forward / 1000 - 0.5) <= 0.02


def test_deterministic_and_text_form():
    a, b = gen_directional_facts(50, 5, 9), gen_directional_facts(50, 5, 9)
    assert a == b
    s = a[0]
    t = s.payload.triples[0]
    assert s.references == (f"{t.head} is part of {t.tail}.",)


def test_odd_and_tiny_sizes():
    assert len(gen_directional_facts(7, 4, 0)) == 7
    assert len(gen_directional_facts(1, 4, 0)) == 1
    with pytest.raises(ValueError):
        gen_directional_facts(10, 3, 0)


def test_bag_of_labels_hides_direction():
    scheme = LinearizationScheme.neutral()
    samples = gen_directional_facts(200, 6, 1)
    bags = {}
    for s in samples:
        bag = tuple(sorted(" ".join(u) for u in [shuffle_kg(linearize_kg(s.payload, scheme), "unit", 0)]))
        key = tuple(sorted(linearize_kg(s.payload, scheme)))
        bags.setdefault(key, set()).add(s.references[0])
    # Each bag of tokens corresponds to both directions.
    assert all(len(texts) == 2 for texts in bags.values())


def test_direction_metric():
    assert direction_correct("Bala is part of Bame .", "Bala", "Bame")
    assert not direction_correct("Bame is part of Bala .", "Bala", "Bame")
    assert not direction_correct("Bala Bame", "Bala", "Bame")
    from graph2text.graph import KgTriple

    triples = [KgTriple("A", "is part of", "B"), KgTriple("C", "is part of", "D")]
    assert direction_accuracy(["A is part of B.", "D is part of C."], triples) == 0.5
    assert direction_accuracy([], []) == 0.0


def test_splits_share_entities_but_differ():
    splits = directional_splits(100, 20, 20, 8, 0)
    assert [len(splits[k]) for k in ("train", "dev", "test")] == [100, 20, 20]
    assert _pairs(splits["train"])[:20] != _pairs(splits["dev"])
    assert {s.split for s in splits["dev"]} == {"dev"}
