import random

import pytest
from hypothesis import given, settings, strategies as st

from fkcqa.model import (
    Atom, Const, Database, Fact, ForeignKey, Query, RelationSchema, UsageError, Var, blocks,
    consistent, dangling, freeze, is_about, key_equal, query_eval, satisfies, satisfies_fk,
    satisfies_pk, substitute,
)
from fkcqa.sampling import random_db, random_instance
from fkcqa.textio import parse_db, problem

from conftest import load_db, load_problem

DOCS = load_problem("docs_authors")
DOCS_DB = load_db("docs_authors", DOCS)
AUTHORS, R = DOCS.schemas["AUTHORS"], DOCS.schemas["R"]


def test_schema_invariants():
    with pytest.raises(UsageError):
        RelationSchema("R", 2, 3)
    with pytest.raises(UsageError):
        RelationSchema("R", 2, 0)
    with pytest.raises(UsageError):
        Fact(RelationSchema("R", 2, 1), ("a",))


def test_self_join_rejected():
    r = RelationSchema("R", 2, 1)
    with pytest.raises(UsageError):
        Query([Atom(r, (Var("x"), Var("y"))), Atom(r, (Var("y"), Var("x")))])


def test_fk_needs_unary_target_key():
    with pytest.raises(UsageError):
        ForeignKey(RelationSchema("N", 3, 1), 3, RelationSchema("O", 2, 2))


def test_weak_and_strong():
    r, s = RelationSchema("R", 2, 1), RelationSchema("S", 2, 1)
    assert ForeignKey(r, 1, s).weak
    assert ForeignKey(r, 2, s).strong
    assert ForeignKey(r, 1, r).trivial


def test_key_equal():
    a1 = Fact(AUTHORS, ("o1", "Jeff", "Ullman"))
    a2 = Fact(AUTHORS, ("o1", "Jeffrey", "Ullman"))
    assert key_equal(a1, a2)
    assert key_equal(a1, a1)
    assert not key_equal(Fact(R, ("d1", "o1")), Fact(R, ("d1", "o2")))


def test_docs_authors_blocks():
    authors = [b for b in blocks(DOCS_DB) if next(iter(b)).name == "AUTHORS"]
    assert sorted(len(b) for b in authors) == [1, 2]
    assert blocks(Database()) == []


def test_docs_authors_violations():
    assert not satisfies_pk(DOCS_DB)
    assert satisfies_pk(Database())
    assert satisfies_pk(Database([Fact(R, ("a", "b"))]))
    fk = next(f for f in DOCS.fks if f.target.name == "AUTHORS")
    assert dangling(DOCS_DB, Fact(R, ("d1", "o3")), fk)
    assert not dangling(DOCS_DB, Fact(R, ("d1", "o1")), fk)
    assert not satisfies_fk(DOCS_DB, DOCS.fks)
    assert satisfies_fk(Database(), DOCS.fks)
    # exactly one dangling fact
    assert sum(dangling(DOCS_DB, f, fk) for f in DOCS_DB.of("R")) == 1


def test_trivial_fk_never_dangles():
    r = RelationSchema("R", 2, 1)
    fk = ForeignKey(r, 1, r)
    db = Database([Fact(r, ("a", "b")), Fact(r, ("c", "a"))])
    assert not any(dangling(db, f, fk) for f in db)


def test_rst_chain_r3_consistent():
    spec = load_problem("rst_chain")
    r3 = parse_db("R(a, b)\nS(b, c)\nT(c)\n", spec.schemas)
    assert consistent(r3, spec.fks)


def test_docs_authors_query_matches_raw_db():
    ok, theta = query_eval(DOCS_DB, DOCS.query)
    assert ok
    assert {v.name: c for v, c in theta.items()} == {"x": "d1", "t": "Some pairs problems", "y": "o1", "z": "Ullman"}


def test_query_eval_edge_cases():
    assert not satisfies(Database(), DOCS.query)
    assert satisfies(DOCS_DB, Query())


def test_about():
    assert is_about(DOCS.fks, DOCS.query)[0]
    q, _ = problem("schema DOCS/3 key 1\nschema R/2 key 2\nquery DOCS(x, t, '2016'), R(x, 'o1')")
    r_docs = next(f for f in DOCS.fks if f.target.name == "DOCS")
    r_auth = next(f for f in DOCS.fks if f.target.name == "AUTHORS")
    # AUTHORS is not in this query, so only the R[1] -> DOCS half can even be stated
    assert is_about([r_docs], q)[0]
    assert not is_about([r_docs, r_auth], q)[0]
    assert is_about([], q)[0]


def test_dangling_query_atom_not_about():
    q, fks = problem("schema R/2 key 1\nschema S/2 key 1\nquery R(x, 'a'), S('b', y)\nfk R[2] -> S")
    ok, problems = is_about(fks, q)
    assert not ok and "dangling" in problems[0]


def test_substitution():
    q1, _ = problem(open_fixture("q1"))
    q2, _ = problem(open_fixture("q2"))
    q3, _ = problem(open_fixture("q3"))
    assert substitute(q1, [Var("u")], ["c"]) == q2
    assert substitute(q1, [Var("u"), Var("w")], ["c", "c"]) == q3
    assert substitute(q1, [], []) == q1
    with pytest.raises(UsageError):
        substitute(q1, [Var("nope")], ["c"])


def open_fixture(name):
    from conftest import FIXTURES
    return (FIXTURES / f"{name}.problem").read_text()


# ------------------------------------------------------------ properties

seeds = st.integers(min_value=0, max_value=10**6)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_blocks_partition(seed):
    rng = random.Random(seed)
    q, _ = random_instance(rng)
    db = random_db(rng, q)
    bs = blocks(db)
    union = set().union(*bs) if bs else set()
    assert union == set(db.facts)
    assert sum(len(b) for b in bs) == len(db)
    assert satisfies_pk(db) == all(len(b) == 1 for b in bs)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_query_eval_isomorphism_invariant(seed):
    rng = random.Random(seed)
    q, _ = random_instance(rng)
    db = random_db(rng, q)
    consts = sorted(db.adom | set(q.consts))
    image = [f"k{i}" for i in range(len(consts))]
    rng.shuffle(image)
    ren = dict(zip(consts, image))
    db2 = Database(Fact(f.rel, tuple(ren[v] for v in f.values)) for f in db)
    q2 = Query(Atom(a.rel, tuple(Const(ren[t.value]) if isinstance(t, Const) else t for t in a.terms)) for a in q)
    assert satisfies(db, q) == satisfies(db2, q2)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_about_means_frozen_query_satisfies_fk(seed):
    rng = random.Random(seed)
    q, fks = random_instance(rng)
    if is_about(fks, q)[0]:
        assert satisfies_fk(freeze(q, prefix="◦"), fks)
