"""Covering-model construction, LP export, reductions, exact solving."""

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from provfact.exact import solve_exact
from provfact.gen import GenSpec, fixture_query, gen_random
from provfact.ilp import EmptyWitnessSet, build_ilp, export_lp, model_stats, solve_model
from provfact.provenance import WitnessSet, compute_witnesses


def test_appb1_structure(appb1_db):
    """The 2-witness 3-chain model: 2 plan constraints, 12 prefix
    constraints, 12 variables of which 8 are distinct prefix variables."""
    q = fixture_query("3chain")
    W = compute_witnesses(q, appb1_db)
    m = build_ilp(q, W)
    stats = model_stats(m)
    assert stats["n"] == 2 and stats["k"] == 2 and stats["m"] == 3
    assert len(m.plan_constraints) == 2
    assert len(m.prefix_constraints) == 12
    assert stats["vars"] == 12
    assert stats["constraints"] == 14
    prefix_vars = {v for v in m.binaries if v.startswith("p_")}
    plan_vars = {v for v in m.binaries if v.startswith("q_")}
    assert len(prefix_vars) == 8
    assert len(plan_vars) == 4
    # every objective weight is 1 on this instance
    assert sorted(m.objective) == sorted(prefix_vars)
    assert all(w == 1 for w in m.objective.values())


def test_appb1_solve(appb1_db):
    q = fixture_query("3chain")
    W = compute_witnesses(q, appb1_db)
    value, solution = solve_model(build_ilp(q, W))
    assert value == 4
    assert all(val in (0, 1) for val in solution.values())
    reduced_value, _ = solve_model(build_ilp(q, W, reduce=True))
    assert reduced_value == 4


def test_export_lp_format(appb1_db):
    q = fixture_query("3chain")
    W = compute_witnesses(q, appb1_db)
    m = build_ilp(q, W)
    text = export_lp(m)
    assert text.startswith("\\ minimal factorization model for three_chain (n=2, k=2, m=3)")
    assert "Minimize" in text and "obj:" in text
    assert "Subject To" in text
    assert "plan_w1:" in text and "plan_w2:" in text
    assert ">= 1" in text
    assert "Binaries" in text.split("Subject To")[1]
    assert text.rstrip().endswith("End")
    # the same text goes to file-like sinks and to paths
    buf = io.StringIO()
    export_lp(m, sink=buf)
    assert buf.getvalue() == text


def test_export_lp_to_path(tmp_path, appb1_db):
    q = fixture_query("3chain")
    W = compute_witnesses(q, appb1_db)
    m = build_ilp(q, W)
    p = tmp_path / "model.lp"
    export_lp(m, sink=str(p))
    assert p.read_text() == export_lp(m)


def test_empty_witness_set():
    q = fixture_query("3chain")
    with pytest.raises(EmptyWitnessSet):
        build_ilp(q, WitnessSet(q, ()))


@given(st.integers(0, 200), st.integers(0, 2))
def test_model_optimum_matches_exact_search(seed, variant):
    """Solving the covering model equals the dedicated search."""
    name, d, t = [("q2star", 5, 7), ("2chain", 5, 8), ("triangle", 4, 8)][variant]
    q = fixture_query(name)
    W = compute_witnesses(q, gen_random(GenSpec(query=q, d=d, tuples=t, seed=seed)))
    if not (1 <= len(W.witnesses) <= 8):
        return
    m = build_ilp(q, W)
    value, _ = solve_model(m)
    exact = solve_exact(q, W)
    assert exact.optimal
    assert value == exact.length
    reduced = build_ilp(q, W, reduce=True)
    rvalue, _ = solve_model(reduced)
    assert rvalue == value
    assert model_stats(reduced)["vars"] <= model_stats(m)["vars"]


@given(st.integers(0, 200), st.integers(0, 2))
def test_model_size_bound(seed, variant):
    """vars ≤ n(1+km): one plan variable per witness-plan pair and at most
    one prefix variable per witness-plan-atom triple."""
    name, d, t = [("q2star", 5, 7), ("3chain", 4, 7), ("triangle", 4, 8)][variant]
    q = fixture_query(name)
    W = compute_witnesses(q, gen_random(GenSpec(query=q, d=d, tuples=t, seed=seed)))
    if not W.witnesses:
        return
    for reduce in (False, True):
        m = build_ilp(q, W, reduce=reduce)
        stats = model_stats(m)
        n, k, mm = stats["n"], stats["k"], stats["m"]
        assert stats["vars"] <= n * (1 + k * mm)
        assert stats["constraints"] <= n + n * k * mm
