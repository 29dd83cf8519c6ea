import numpy as np
import pytest
from hypothesis import given, strategies as st

from graph2text.graph import (
    AmrGraph,
    KgTriple,
    KnowledgeGraph,
    Sample,
    graph_order,
    isomorphic,
    normalize_edge,
    validate_amr,
)
from helpers import random_amr


def test_single_node_is_valid():
    assert validate_amr(AmrGraph("a", [("a", "alpha")])) == []


def test_disconnected_node_reported():
    g = AmrGraph("a", [("a", "alpha"), ("b", "beta")])
    assert validate_amr(g) == ["node b unreachable from root"]


def test_undeclared_edge_target():
    g = AmrGraph("a", [("a", "alpha")], edges=[("a", ":ARG0", "z")])
    assert validate_amr(g) == ["edge target z undeclared"]


def test_other_violations():
    g = AmrGraph("r", [("a", "alpha"), ("a", "beta")], edges=[("a", "ARG0", "a")], attributes=[("q", ":polarity", "-")])
    problems = validate_amr(g)
    assert "duplicate node id a" in problems
    assert "root r undeclared" in problems
    assert any("malformed relation label" in p for p in problems)
    assert "attribute owner q undeclared" in problems


def test_reachability_ignores_direction():
    g = AmrGraph("a", [("a", "alpha"), ("b", "beta")], edges=[("b", ":ARG0-of", "a")])
    assert validate_amr(g) == []


def test_graph_order():
    assert graph_order(AmrGraph("a", [("a", "alpha")])) == (1, 0)
    kg = KnowledgeGraph(["x", "y", "z"], [("x", "r", "y"), ("y", "r", "z")])
    assert graph_order(kg) == (3, 2)


def test_attributes_do_not_count_as_nodes():
    g = AmrGraph("a", [("a", "alpha")], attributes=[("a", ":polarity", "-")])
    assert graph_order(g) == (1, 0)


def test_kg_invariants():
    with pytest.raises(ValueError):
        KnowledgeGraph(["x", "x"], [])
    with pytest.raises(ValueError):
        KnowledgeGraph(["x"], [("x", "r", "y")])
    with pytest.raises(ValueError):
        KgTriple("x", " ", "y")
    kg = KnowledgeGraph.from_triples([("x", "r", "y"), ("y", "s", "x")])
    assert kg.entities == ("x", "y")
    assert kg.relations() == {"r", "s"}


def test_sample_requires_references_and_split():
    kg = KnowledgeGraph.from_triples([("x", "r", "y")])
    with pytest.raises(ValueError):
        Sample("s", kg, [])
    with pytest.raises(ValueError):
        Sample("s", kg, ["t"], split="validation")


def test_normalize_edge():
    assert normalize_edge("a", ":ARG0-of", "b") == ("b", ":ARG0", "a")
    assert normalize_edge("a", ":consist-of", "b") == ("a", ":consist-of", "b")
    assert normalize_edge("a", ":prep-out-of", "b") == ("a", ":prep-out-of", "b")


def test_isomorphism_modulo_renaming_and_inverse_roles():
    a = AmrGraph("w", [("w", "want-01"), ("b", "boy")], edges=[("w", ":ARG0", "b")])
    b = AmrGraph("x", [("y", "boy"), ("x", "want-01")], edges=[("y", ":ARG0-of", "x")])
    c = AmrGraph("w", [("w", "want-01"), ("b", "boy")], edges=[("w", ":ARG1", "b")])
    assert isomorphic(a, b)
    assert not isomorphic(a, c)


@given(st.integers(0, 2**32 - 1))
def test_random_graphs_valid(seed):
    assert validate_amr(random_amr(np.random.default_rng(seed))) == []


@given(st.integers(0, 2**32 - 1), st.sampled_from(["drop-node", "dangling-edge", "dup-id", "bad-root", "bad-role"]))
def test_injected_faults_detected(seed, fault):
    rng = np.random.default_rng(seed)
    g = random_amr(rng, max_nodes=8)
    nodes, edges = list(g.nodes), list(g.edges)
    if fault == "drop-node":
        if len(nodes) < 2:
            nodes.append(("zz9", "orphan"))
        else:
            # Removing a non-root node with edges leaves dangling endpoints.
            victim = nodes.pop(1)[0]
            if not any(victim in (s, t) for s, _, t in edges):
                nodes.append(("zz9", "orphan"))
    elif fault == "dangling-edge":
        edges.append((g.root, ":ARG0", "zz9"))
    elif fault == "dup-id":
        nodes.append((nodes[0][0], "dup"))
    elif fault == "bad-root":
        g = AmrGraph("zz9", nodes, edges, g.attributes)
    elif fault == "bad-role":
        edges.append((g.root, "ARG0", g.root))
    broken = AmrGraph(g.root, nodes, edges, g.attributes)
    assert validate_amr(broken) != []


@given(st.integers(0, 2**32 - 1))
def test_graph_order_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    g = random_amr(rng)
    shuffled = AmrGraph(
        g.root,
        [g.nodes[i] for i in rng.permutation(len(g.nodes))],
        [g.edges[i] for i in rng.permutation(len(g.edges))],
        g.attributes,
    )
    assert graph_order(shuffled) == graph_order(g)
    assert isomorphic(shuffled, g)
