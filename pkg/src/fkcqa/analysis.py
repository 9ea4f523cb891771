"""Functional dependencies, attack graphs, dependency graphs and related closures."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import networkx as nx

from .model import Atom, ForeignKey, Query, RelationSchema, Var


@dataclass(frozen=True, order=True)
class Position:
    rel: str
    index: int

    def __str__(self):
        return f"({self.rel},{self.index})"


def fds(q: Query, excluding: Optional[Atom] = None) -> list:
    """FD(q minus excluding) as (lhs, rhs) pairs of variable sets."""
    return [(a.key_vars, a.vars) for a in q if a != excluding]


def fd_closure(q: Query, X: Iterable[Var], excluding: Optional[Atom] = None) -> frozenset:
    closure = set(X)
    deps = fds(q, excluding)
    changed = True
    while changed:
        changed = False
        for lhs, rhs in deps:
            if lhs <= closure and not rhs <= closure:
                closure |= rhs
                changed = True
    return frozenset(closure)


def key_closure(q: Query, f: Atom) -> frozenset:
    """K+(F, q): closure of key-vars(F) under FD(q \\ {F})."""
    return fd_closure(q, f.key_vars, excluding=f)


@dataclass
class AttackGraph:
    atoms: list
    edges: dict = field(default_factory=dict)  # (F name, G name) -> witness variable path
    attacked_vars: dict = field(default_factory=dict)  # F name -> variables F attacks

    def attacks(self, f: str, g: str) -> bool:
        return (f, g) in self.edges

    def incoming(self, g: str) -> list:
        return sorted(f for (f, h) in self.edges if h == g)

    def as_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(a.name for a in self.atoms)
        g.add_edges_from(self.edges)
        return g


def attack_graph(q: Query) -> AttackGraph:
    graph = AttackGraph(atoms=list(q))
    for f in q:
        blocked = key_closure(q, f)
        start = sorted(f.vars - blocked)
        parent = {v: None for v in start}
        queue = deque(start)
        while queue:
            v = queue.popleft()
            for a in q:
                if v in a.vars:
                    for w in sorted(a.vars - blocked):
                        if w not in parent:
                            parent[w] = v
                            queue.append(w)
        graph.attacked_vars[f.name] = frozenset(parent)
        for g in q:
            if g == f:
                continue
            hits = sorted(g.vars & parent.keys())
            if hits:
                path, v = [], hits[0]
                while v is not None:
                    path.append(v)
                    v = parent[v]
                graph.edges[(f.name, g.name)] = list(reversed(path))
    return graph


def is_acyclic(g: AttackGraph) -> tuple:
    """(True, None) or (False, cycle as a list of atom names)."""
    try:
        cyc = nx.find_cycle(g.as_networkx())
    except nx.NetworkXNoCycle:
        return True, None
    return False, [u for u, _ in cyc]


def attack_witness_ok(q: Query, f: Atom, g: Atom, path: list) -> bool:
    """Literal check of an attack witness sequence."""
    blocked = key_closure(q, f)
    if not path or path[0] not in f.vars or path[-1] not in g.vars:
        return False
    if any(v in blocked or v not in q.vars for v in path):
        return False
    return all(any({x, y} <= a.vars for a in q) for x, y in zip(path, path[1:]))


# ------------------------------------------------------------ dependency graph

def dependency_graph(fks: Iterable[ForeignKey]) -> nx.DiGraph:
    """Positions of FK relations; edge attribute ``special`` marks edges into non-key positions."""
    g = nx.DiGraph()
    for fk in fks:
        for r in (fk.source, fk.target):
            g.add_nodes_from(Position(r.name, i) for i in range(1, r.arity + 1))
        for j in range(1, fk.target.arity + 1):
            g.add_edge(Position(fk.source.name, fk.pos), Position(fk.target.name, j), special=j != 1)
    return g


def pos_closure(P: Iterable[Position], fks: Iterable[ForeignKey]) -> frozenset:
    g = dependency_graph(fks)
    out = set(P)
    for p in list(out):
        if p in g:
            out |= nx.descendants(g, p)
    return frozenset(out)


def all_positions(schema: Iterable[RelationSchema]) -> frozenset:
    return frozenset(Position(r.name, i) for r in schema for i in range(1, r.arity + 1))


def pos_complement(P: Iterable[Position], fks: Iterable[ForeignKey], schema: Iterable[RelationSchema]) -> frozenset:
    return all_positions(schema) - pos_closure(P, fks)


def on_cycle(p: Position, g: nx.DiGraph) -> list | None:
    """A cycle through p (as a list of positions) or None."""
    if p not in g:
        return None
    if g.has_edge(p, p):
        return [p]
    for succ in g.successors(p):
        if nx.has_path(g, succ, p):
            return [p] + nx.shortest_path(g, succ, p)[:-1]
    return None


def lclosure(fks: Iterable[ForeignKey], schema: Iterable[RelationSchema]) -> frozenset:
    schema = list(schema)
    out = set(fks)
    out |= {ForeignKey(r, 1, r) for r in schema if r.key_len == 1}
    changed = True
    while changed:
        changed = False
        for a in list(out):
            for b in list(out):
                if b.pos == 1 and b.source == a.target:
                    c = ForeignKey(a.source, a.pos, b.target)
                    if c not in out:
                        out.add(c)
                        changed = True
    names = {r.name for r in schema}
    return frozenset(fk for fk in out if fk.source.name in names and fk.target.name in names)


# ------------------------------------------------------------- connectivity

def connectivity_graph(V: Iterable[Var], q: Query) -> nx.Graph:
    V = set(V)
    g = nx.Graph()
    g.add_nodes_from(V)
    for a in q:
        vs = sorted(a.vars & V)
        g.add_edges_from((x, y) for i, x in enumerate(vs) for y in vs[i + 1:])
    return g


def connected(x: Var, y: Var, V: Iterable[Var], q: Query) -> bool:
    g = connectivity_graph(V, q)
    return x in g and y in g and nx.has_path(g, x, y)


def nonconstant_vars(q: Query, sub: Query) -> frozenset:
    """Variables of ``sub`` not determined by the empty set under FD(q)."""
    return sub.vars - fd_closure(q, ())
