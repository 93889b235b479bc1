"""Shared fixtures and hypothesis configuration for the test suite."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

import dbs
from provfact.gen import GenSpec, fixture_query, gen_random
from provfact.provenance import compute_witnesses, parse_database

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def fig2a_db():
    return parse_database(dbs.FIG2A)


@pytest.fixture(scope="session")
def fig2a_s13_db():
    return parse_database(dbs.FIG2A_S13)


@pytest.fixture(scope="session")
def appb1_db():
    return parse_database(dbs.APPB1)


@pytest.fixture(scope="session")
def fig7d_db():
    return parse_database(dbs.FIG7D)


@pytest.fixture(scope="session")
def leakage_db():
    return parse_database(dbs.LEAKAGE)


def seeded_witness_sets(qname, d, tuples, seeds, *, min_witnesses=2, max_witnesses=12, limit=None):
    """Generate seeded random instances and keep the usable ones.

    Usable = witness count within [min_witnesses, max_witnesses].  Returns
    (query, [(seed, witness_set), ...]); stops early once `limit` usable
    instances are collected.
    """
    q = fixture_query(qname)
    out = []
    for seed in seeds:
        db = gen_random(GenSpec(query=q, d=d, tuples=tuples, seed=seed))
        w = compute_witnesses(q, db)
        if min_witnesses <= len(w.witnesses) <= max_witnesses:
            out.append((seed, w))
            if limit is not None and len(out) >= limit:
                break
    return q, out
