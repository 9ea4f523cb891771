import random

import pytest
from hypothesis import given, settings, strategies as st

from fkcqa.analysis import attack_graph, is_acyclic
from fkcqa.fo import base_certain, base_formula, evaluate, unattacked_atom
from fkcqa.model import Database, Fact, UsageError
from fkcqa.oracle import pk_certain
from fkcqa.sampling import random_db, random_query
from fkcqa.textio import parse_db, problem

from conftest import load_db, load_problem

seeds = st.integers(min_value=0, max_value=10**6)


def acyclic_query(rng):
    while True:
        q = random_query(rng, max_atoms=3)
        if is_acyclic(attack_graph(q))[0]:
            return q


def test_asym_pk_only():
    spec = load_problem("asym")
    db = load_db("asym", spec)
    assert base_certain(spec.query, db) == pk_certain(db, spec.query)
    assert evaluate(base_formula(spec.query), db) == pk_certain(db, spec.query)


def test_trivial_cases():
    q = load_problem("q1").query
    assert not base_certain(q, Database())
    db = parse_db("N(a, b, c)\nO(c, d)\n", {a.name: a.rel for a in q})
    assert base_certain(q, db)
    assert evaluate(base_formula(q), db)


def test_cyclic_rejected():
    q = load_problem("cycle").query
    with pytest.raises(UsageError):
        base_certain(q, Database())
    with pytest.raises(UsageError):
        base_formula(q)


def test_unattacked_tie_break():
    q, _ = problem("schema B/1 key 1\nschema A/1 key 1\nquery B(x), A(y)")
    assert unattacked_atom(q).name == "A"


def test_formula_text():
    q = load_problem("q1").query
    text = str(base_formula(q))
    assert text.startswith("EXISTS x.") and "FORALL" in text


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_base_certain_matches_pk_repairs(seed):
    rng = random.Random(seed)
    q = acyclic_query(rng)
    db = random_db(rng, q, max_facts=8)
    assert base_certain(q, db) == pk_certain(db, q)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_formula_matches_base_certain(seed):
    rng = random.Random(seed)
    q = acyclic_query(rng)
    db = random_db(rng, q, max_facts=6)
    assert evaluate(base_formula(q), db) == base_certain(q, db)
