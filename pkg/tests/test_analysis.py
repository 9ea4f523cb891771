import itertools
import random

import networkx as nx
from hypothesis import given, settings, strategies as st

from fkcqa.analysis import (
    Position, all_positions, attack_graph, attack_witness_ok, connected, dependency_graph,
    fd_closure, fds, is_acyclic, key_closure, lclosure, nonconstant_vars, on_cycle, pos_closure,
    pos_complement,
)
from fkcqa.model import Database, Fact, ForeignKey, RelationSchema, Var, dangling, satisfies_fk
from fkcqa.sampling import random_fks, random_query
from fkcqa.textio import problem

from conftest import load_problem

x, y, u, w = Var("x"), Var("y"), Var("u"), Var("w")
seeds = st.integers(min_value=0, max_value=10**6)


def q_of(text):
    return problem(text)[0]


def naive_closure(q, X, excluding=None):
    """Intersection of every FD-closed superset of X."""
    V = sorted(q.vars)
    deps = fds(q, excluding)
    best = set(V)
    for n in range(len(V) + 1):
        for S in itertools.combinations(V, n):
            S = set(S)
            if set(X) <= S and all(not lhs <= S or rhs <= S for lhs, rhs in deps):
                best &= S
    return frozenset(best)


def test_fd_closure_examples():
    q = load_problem("reach").query
    assert fd_closure(q, ()) == frozenset()
    assert fd_closure(q, q.vars) == q.vars
    asym = load_problem("asym").query
    assert fd_closure(asym, ()) == {y}


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_fd_closure_matches_naive(seed):
    rng = random.Random(seed)
    q = random_query(rng, max_atoms=4)
    for f in q:
        assert key_closure(q, f) == naive_closure(q, f.key_vars, excluding=f)
    X = [v for v in sorted(q.vars) if rng.random() < 0.3]
    assert fd_closure(q, X) == naive_closure(q, X)


def test_attack_graph_named_queries():
    cyc = load_problem("cycle").query
    ok, cycle = is_acyclic(attack_graph(cyc))
    assert not ok and sorted(cycle) == ["R", "S"]
    for name in ("q1", "q2", "q3"):
        assert is_acyclic(attack_graph(load_problem(name).query))[0]
    single = q_of("schema R/2 key 1\nquery R(x, y)")
    assert attack_graph(single).edges == {}


def _attack_oracle(q, f, g):
    blocked = key_closure(q, f)
    h = nx.Graph()
    free = q.vars - blocked
    h.add_nodes_from(free)
    for a in q:
        for v1, v2 in itertools.combinations(sorted(a.vars & free), 2):
            h.add_edge(v1, v2)
    return any(nx.has_path(h, s, t) for s in f.vars & free for t in g.vars & free)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_attack_edges_and_witnesses(seed):
    rng = random.Random(seed)
    q = random_query(rng, max_atoms=4)
    ag = attack_graph(q)
    for f in q:
        for g in q:
            if f == g:
                continue
            assert ag.attacks(f.name, g.name) == _attack_oracle(q, f, g)
            if ag.attacks(f.name, g.name):
                assert attack_witness_ok(q, f, g, ag.edges[(f.name, g.name)])


def test_is_acyclic_empty():
    assert is_acyclic(attack_graph(q_of("schema R/1 key 1\nquery R(x)")))[0]


def test_dependency_graph_example():
    R = RelationSchema("R", 3, 2)
    S, T = RelationSchema("S", 2, 1), RelationSchema("T", 2, 1)
    g = dependency_graph([ForeignKey(R, 1, S), ForeignKey(R, 3, T)])
    edges = {(a, b): d["special"] for a, b, d in g.edges(data=True)}
    P = Position
    assert edges == {
        (P("R", 1), P("S", 1)): False, (P("R", 1), P("S", 2)): True,
        (P("R", 3), P("T", 1)): False, (P("R", 3), P("T", 2)): True,
    }
    assert dependency_graph([]).number_of_nodes() == 0


def test_self_reference_cycle():
    N = RelationSchema("N", 2, 1)
    g = dependency_graph([ForeignKey(N, 2, N)])
    assert set(g.successors(Position("N", 2))) == {Position("N", 1), Position("N", 2)}
    assert on_cycle(Position("N", 2), g) == [Position("N", 2)]
    assert on_cycle(Position("N", 1), g) is None


def test_pos_closure_examples():
    spec = load_problem("reach")
    assert pos_closure({Position("N", 2)}, spec.fks) == {Position("N", 2)}
    assert pos_closure({Position("N", 3)}, spec.fks) == {Position("N", 3), Position("O", 1)}
    assert pos_closure(set(), spec.fks) == frozenset()


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_pos_closure_laws(seed):
    rng = random.Random(seed)
    q = random_query(rng)
    fks = random_fks(rng, q, max_fks=3, allow_trivial=True)
    everything = sorted(all_positions(q.relations))
    P = {p for p in everything if rng.random() < 0.3}
    Q = P | {p for p in everything if rng.random() < 0.3}
    c = pos_closure(P, fks)
    assert P <= c
    assert pos_closure(c, fks) == c
    assert c <= pos_closure(Q, fks)
    comp = pos_complement(P, fks, q.relations)
    assert not (comp & c) and (comp | c) == all_positions(q.relations)


def test_lclosure_examples():
    R, S, T = RelationSchema("R", 2, 1), RelationSchema("S", 2, 1), RelationSchema("T", 1, 1)
    fks = {ForeignKey(R, 2, S), ForeignKey(S, 1, T)}
    closed = lclosure(fks, [R, S, T])
    assert ForeignKey(R, 2, T) in closed
    assert lclosure(closed, [R, S, T]) == closed
    K2 = RelationSchema("K", 2, 2)
    assert lclosure(set(), [K2]) == frozenset()


def _chase_random(rng, schemas, fks, n):
    """A random database satisfying fks: random facts, then add referenced facts."""
    dom = ["a", "b", "c"]
    facts = {Fact(r, tuple(rng.choice(dom) for _ in range(r.arity)))
             for r in (rng.choice(schemas) for _ in range(n))}
    while True:
        db = Database(facts)
        missing = [(fk, f) for fk in fks for f in db.of(fk.source.name) if dangling(db, f, fk)]
        if not missing:
            return db
        fk, f = missing[0]
        facts.add(Fact(fk.target, (f.values[fk.pos - 1],) + tuple(rng.choice(dom) for _ in range(fk.target.arity - 1))))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_lclosure_semantically_sound(seed):
    rng = random.Random(seed)
    q = random_query(rng, max_atoms=3)
    fks = random_fks(rng, q, max_fks=3)
    implied = lclosure(fks, q.relations) - set(fks)
    for _ in range(10):
        db = _chase_random(rng, q.relations, fks, rng.randint(0, 6))
        assert satisfies_fk(db, fks)
        assert satisfies_fk(db, implied)


def test_connectivity():
    q0 = load_problem("q0_connected").query
    rest = q0.without("N'")
    V = nonconstant_vars(q0, rest)
    assert V == {x, y}
    assert connected(x, y, V, rest)
    assert connected(x, x, V, rest)
    assert not connected(x, y, {x, y}, q_of("schema A/1 key 1\nschema B/1 key 1\nquery A(x), B(y)"))


def test_nonconstant_vars():
    asym = load_problem("asym").query
    assert y not in nonconstant_vars(asym, asym.without("N"))
    q1 = load_problem("q1").query
    assert nonconstant_vars(q1, q1) == q1.vars
