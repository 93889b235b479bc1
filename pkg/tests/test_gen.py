"""Instance generators: fixtures, random data, graphs, hardness gadgets."""

import pytest

import oracles
from provfact.exact import solve_exact
from provfact.gen import (
    FIXTURE_QUERIES,
    GenSpec,
    GraphInput,
    NoTriad,
    fixture_query,
    gen_3star_gadget,
    gen_random,
    gen_triad_gadget,
    random_graph,
)
from provfact.provenance import compute_witnesses
from provfact.veo import enumerate_mveo


def test_fixture_query_names():
    assert sorted(FIXTURE_QUERIES) == [
        "2chain",
        "2chain-we",
        "3chain",
        "4chain",
        "q2star",
        "q3star",
        "triangle",
        "triangle-u",
    ]
    q = fixture_query("q3star")
    assert [str(a) for a in q.atoms] == ["R(x)", "S(y)", "T(z)", "W(x,y,z)"]
    with pytest.raises(KeyError):
        fixture_query("nope")


def test_gen_random_deterministic():
    q = fixture_query("2chain")
    spec = GenSpec(query=q, d=5, tuples=8, seed=42)
    assert gen_random(spec).text() == gen_random(spec).text()
    other = gen_random(GenSpec(query=q, d=5, tuples=8, seed=43))
    assert other.text() != gen_random(spec).text()


def test_gen_random_shape():
    q = fixture_query("2chain")
    db = gen_random(GenSpec(query=q, d=4, tuples=6, seed=0))
    assert set(db.relations) == {"R", "S", "T"}
    for atom in q.atoms:
        rows = db.relations[atom.relation]
        assert 1 <= len(rows) <= 6  # dedup may shrink below the request
        for row in rows:
            assert len(row) == len(atom.vars)
            assert all(0 <= int(c) < 4 for c in row)


def test_random_graph():
    g0 = random_graph(6, 0.0, seed=1)
    assert g0.edges == ()
    g1 = random_graph(5, 1.0, seed=1)
    assert len(g1.edges) == 10  # complete graph
    g = random_graph(8, 0.3, seed=7)
    assert g == random_graph(8, 0.3, seed=7)
    assert g != random_graph(8, 0.3, seed=8)
    assert all(u != v for u, v in g.edges)
    assert all(u in g.vertices and v in g.vertices for u, v in g.edges)


def test_graph_input_from_edges():
    g = GraphInput.from_edges([(2, 1), (3, 1)])
    assert g.vertices == (1, 2, 3)  # derived from the edge list, sorted
    assert g.edges == ((2, 1), (3, 1))
    with pytest.raises(ValueError):
        GraphInput.from_edges([(1, 1)])  # self-loop
    with pytest.raises(ValueError):
        GraphInput.from_edges([(1, 2), (2, 1)])  # duplicate up to direction


# Hand-solved gadget penalties: a graph with E edges and covered-subgraph
# independence number α yields a minimum factorization with penalty 2E − α.
SMALL_GRAPHS = {
    "one-edge": ([(1, 2)], 1),
    "path-2": ([(1, 2), (2, 3)], 2),
    "matching-2": ([(1, 2), (3, 4)], 2),
    "star-3": ([(1, 2), (1, 3), (1, 4)], 3),
    "path-3": ([(1, 2), (2, 3), (3, 4)], 4),
    "k3": ([(1, 2), (2, 3), (1, 3)], 5),
}


@pytest.mark.parametrize("name", sorted(SMALL_GRAPHS))
def test_3star_gadget_small_graphs(name):
    edges, want_penalty = SMALL_GRAPHS[name]
    g = GraphInput.from_edges(edges)
    assert 2 * len(g.edges) - oracles.brute_alpha(g) == want_penalty
    q = fixture_query("q3star")
    db = gen_3star_gadget(g)
    W = compute_witnesses(q, db)
    assert len(W.witnesses) == 3 * len(g.edges)
    res = solve_exact(q, W, budget=2_000_000)
    assert res.optimal
    assert res.length - len(W.distinct_tuples) == want_penalty


def test_3star_gadget_five_edge_graph():
    """Five-edge graph with independence number 3: penalty 2·5 − 3 = 7."""
    g = GraphInput.from_edges([(1, 2), (2, 3), (3, 4), (2, 4), (4, 5)])
    assert oracles.brute_alpha(g) == 3
    q = fixture_query("q3star")
    W = compute_witnesses(q, gen_3star_gadget(g))
    assert len(W.witnesses) == 15
    res = solve_exact(q, W, budget=2_000_000)
    assert res.optimal
    assert res.length - len(W.distinct_tuples) == 7


@pytest.mark.parametrize("name", ["one-edge", "path-2", "k3"])
def test_triad_gadget_small_graphs(name):
    edges, want_penalty = SMALL_GRAPHS[name]
    g = GraphInput.from_edges(edges)
    q = fixture_query("triangle")
    db = gen_triad_gadget(q, g)
    W = compute_witnesses(q, db)
    assert len(W.witnesses) == 3 * len(g.edges)
    res = solve_exact(q, W, budget=2_000_000)
    assert res.optimal
    assert res.length - len(W.distinct_tuples) == want_penalty


def test_triad_gadget_requires_triad():
    g = GraphInput.from_edges([(1, 2)])
    with pytest.raises(NoTriad):
        gen_triad_gadget(fixture_query("2chain"), g)


def test_gadget_empty_graph():
    g = GraphInput(vertices=(1, 2), edges=())
    db = gen_3star_gadget(g)
    q = fixture_query("q3star")
    W = compute_witnesses(q, db)
    assert not W.witnesses


def test_gadget_determinism():
    g = GraphInput.from_edges([(1, 2), (2, 3)])
    assert gen_3star_gadget(g).text() == gen_3star_gadget(g).text()
    q = fixture_query("triangle")
    assert gen_triad_gadget(q, g).text() == gen_triad_gadget(q, g).text()
