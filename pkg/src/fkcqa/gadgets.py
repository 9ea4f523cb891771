"""Hardness gadgets and two special-case solvers.

Three fixed problems live here:

* ``REACH``: q = {N(x, 'c', y), O(y)} with N[3] -> O.  Graph reachability
  reduces to its complement, and dual-Horn satisfiability is equivalent to
  its complement.
* ``NL_SPECIAL``: q = {N(x, x), O(x)} with N[2] -> O, decided by a
  reachability test.
* the two-cycle gadget for any query whose attack graph has a 2-cycle, which
  transfers primary-key-only hardness to the setting with foreign keys.

Generators take a ``ns`` prefix that is prepended to every constant they
invent, so gadget data never collides with user data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import networkx as nx

from .analysis import attack_graph, key_closure
from .model import Atom, Const, Database, Fact, Query, UsageError, Var, apply_valuation
from .textio import problem

REACH_TEXT = """\
schema N/3 key 1
schema O/1 key 1
query N(x, 'c', y), O(y)
fk N[3] -> O
"""

NL_SPECIAL_TEXT = """\
schema N/2 key 1
schema O/1 key 1
query N(x, x), O(x)
fk N[2] -> O
"""

MARK = "c"
OTHER = "d"


def reach_problem():
    return problem(REACH_TEXT)


def nl_special_problem():
    return problem(NL_SPECIAL_TEXT)


def _schemas(text):
    q, _ = problem(text)
    return {a.name: a.rel for a in q}


def _check_schema(db: Database, text: str):
    schemas = _schemas(text)
    for f in db.facts:
        if schemas.get(f.name) != f.rel:
            raise UsageError(f"{f} does not fit the schema {', '.join(map(str, schemas.values()))}")
    return schemas


# ------------------------------------------------------------ reachability

@dataclass(frozen=True)
class DirectedGraphInput:
    vertices: frozenset
    edges: frozenset
    s: object
    t: object

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", frozenset(self.edges))
        if self.s not in self.vertices or self.t not in self.vertices:
            raise UsageError("s and t must be vertices")
        for u, w in self.edges:
            if u not in self.vertices or w not in self.vertices:
                raise UsageError(f"edge ({u}, {w}) leaves the vertex set")

    def reachable(self) -> bool:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return nx.has_path(g, self.s, self.t)


def gen_reachability_gadget(g: DirectedGraphInput, ns: str = "") -> Database:
    """N(v, c, v) for v != t, N(u, d, w) per edge, O(s).

    The result is a "no"-instance of ``REACH`` exactly when t is reachable
    from s.
    """
    if g.s == g.t:
        raise UsageError("the gadget needs s != t")
    schemas = _schemas(REACH_TEXT)
    N, O = schemas["N"], schemas["O"]
    name = lambda v: f"{ns}{v}"
    facts = [Fact(N, (name(v), MARK, name(v))) for v in g.vertices if v != g.t]
    facts += [Fact(N, (name(u), OTHER, name(w))) for u, w in g.edges]
    facts.append(Fact(O, (name(g.s),)))
    return Database(facts)


# ------------------------------------------------------------ N(x,x), O(x)

_SINK = object()


def nl_special_graph(db: Database, n: str = "N", o: str = "O"):
    """The graph behind :func:`solve_nl_special`: (digraph, marked vertices, sink)."""
    if n == "N" and o == "O":
        _check_schema(db, NL_SPECIAL_TEXT)
    blocks: dict = {}
    for f in db.of(n):
        blocks.setdefault(f.values[0], set()).add(f.values[1])
    V = {c for c, vals in blocks.items() if c in vals}
    g = nx.DiGraph()
    g.add_nodes_from(V)
    g.add_node(_SINK)
    for c in V:
        others = blocks[c] - {c}
        if not others:
            continue
        if others <= V:
            g.add_edges_from((c, d) for d in others)
        else:
            g.add_edge(c, _SINK)
    marked = {f.values[0] for f in db.of(o)} & V
    return g, marked, _SINK


def solve_nl_special(db: Database, n: str = "N", o: str = "O") -> bool:
    """Certainty for q = {N(x, x), O(x)} with N[2] -> O.

    A falsifying repair lets every marked vertex walk away from its own
    N(c, c) fact forever, either into the sink or around a cycle.  So the
    answer is no iff every marked vertex reaches the sink or a cycle.
    """
    g, marked, sink = nl_special_graph(db, n, o)
    goals = {sink}
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1:
            goals |= comp
    escape = set(goals)
    for v in goals:
        escape |= nx.ancestors(g, v)
    return not marked <= escape


# --------------------------------------------------------------- dual Horn

@dataclass(frozen=True, order=True)
class Clause:
    """``neg`` is the optional negated variable; ``pos`` the positive ones."""
    neg: str | None
    pos: frozenset

    def __post_init__(self):
        object.__setattr__(self, "pos", frozenset(self.pos))

    def __str__(self):
        lits = ([f"~{self.neg}"] if self.neg is not None else []) + sorted(self.pos)
        return " | ".join(lits) if lits else "false"

    def sort_key(self):
        return (self.neg is not None, self.neg or "", sorted(self.pos))


@dataclass(frozen=True)
class DualHornFormula:
    clauses: frozenset

    def __post_init__(self):
        cl = frozenset(self.clauses)
        for c in cl:
            if not isinstance(c, Clause):
                raise UsageError(f"{c!r} is not a dual-Horn clause")
        object.__setattr__(self, "clauses", cl)

    @property
    def variables(self) -> frozenset:
        out = set()
        for c in self.clauses:
            out |= c.pos
            if c.neg is not None:
                out.add(c.neg)
        return frozenset(out)

    def sorted_clauses(self) -> list:
        return sorted(self.clauses, key=Clause.sort_key)

    def evaluate(self, true_vars) -> bool:
        true_vars = set(true_vars)
        return all((c.neg is not None and c.neg not in true_vars) or (c.pos & true_vars) for c in self.clauses)

    def __str__(self):
        return " & ".join(f"({c})" for c in self.sorted_clauses()) or "true"


def parse_dualhorn(text: str) -> DualHornFormula:
    """One clause per line, literals separated by ``|`` or whitespace, ``-p`` or ``~p`` negated."""
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        lits = [t for t in line.replace("|", " ").split() if t]
        negs = [t[1:] for t in lits if t[0] in "~-"]
        if len(negs) > 1:
            raise UsageError(f"line {lineno}: more than one negative literal")
        if lits == ["false"]:
            lits = []
        clauses.append(Clause(negs[0] if negs else None, frozenset(t for t in lits if t[0] not in "~-")))
    return DualHornFormula(frozenset(clauses))


def solve_dualhorn(phi: DualHornFormula) -> bool:
    """Satisfiability by computing the greatest model: start with every
    variable true and falsify whatever a clause forces."""
    false = set()
    changed = True
    while changed:
        changed = False
        for c in phi.clauses:
            if c.pos - false:
                continue
            if c.neg is None:
                return False
            if c.neg not in false:
                false.add(c.neg)
                changed = True
    return True


def dualhorn_to_db(phi: DualHornFormula, ns: str = "") -> Database:
    """Instance of ``REACH`` that is a "no"-instance iff phi is satisfiable."""
    schemas = _schemas(REACH_TEXT)
    N, O = schemas["N"], schemas["O"]
    var = lambda p: f"{ns}v_{p}"
    true = f"{ns}true"
    facts = [Fact(O, (true,))]
    for i, c in enumerate(phi.sorted_clauses(), 1):
        key = f"{ns}k{i}"
        facts.append(Fact(N, (key, MARK, true if c.neg is None else var(c.neg))))
        facts += [Fact(N, (key, OTHER, var(p))) for p in c.pos]
    return Database(facts)


def db_to_dualhorn(db: Database, n: str = "N", o: str = "O", mark: str = MARK) -> DualHornFormula:
    """Formula over the constants of db, satisfiable iff db is a "no"-instance of ``REACH``.

    ``n``, ``o`` and ``mark`` rename the two relations and the constant, so
    any problem of the same shape can be decided this way.
    """
    if n == "N" and o == "O":
        _check_schema(db, REACH_TEXT)
    clauses = {Clause(None, frozenset({f.values[0]})) for f in db.of(o)}
    blocks: dict = {}
    for f in db.of(n):
        blocks.setdefault(f.values[0], []).append(f)
    for block in blocks.values():
        marked = {f.values[2] for f in block if f.values[1] == mark}
        rest = frozenset(f.values[2] for f in block if f.values[1] != mark)
        clauses |= {Clause(p, rest) for p in marked}
    return DualHornFormula(frozenset(clauses))


# ---------------------------------------------------------- shape matching

def special_solver(q: Query, fks):
    """A polynomial decision procedure when (q, fks) has the shape of
    ``REACH`` or ``NL_SPECIAL`` up to renaming, else None."""
    fks = list(fks)
    if len(q) != 2 or len(fks) != 1:
        return None
    fk = fks[0]
    if not (q.has(fk.source.name) and q.has(fk.target.name)) or fk.source == fk.target:
        return None
    src, tgt = q.atom(fk.source.name), q.atom(fk.target.name)
    if tgt.rel.arity != 1 or src.rel.key_len != 1 or fk.pos != src.rel.arity:
        return None
    y = tgt.terms[0]
    if not isinstance(y, Var):
        return None
    t = src.terms
    if src.rel.arity == 2 and t[0] == y and t[1] == y:
        return lambda db: solve_nl_special(db.restrict({src.name, tgt.name}), src.name, tgt.name)
    if (src.rel.arity == 3 and isinstance(t[0], Var) and t[0] != y and isinstance(t[1], Const)
            and t[2] == y):
        mark = t[1].value
        return lambda db: not solve_dualhorn(db_to_dualhorn(db.restrict({src.name, tgt.name}),
                                                            src.name, tgt.name, mark))
    return None


# --------------------------------------------------------- two-cycle gadget

def _bival(q: Query, F: Atom, G: Atom, bottom: str):
    kf, kg = key_closure(q, F), key_closure(q, G)

    def theta(a, b) -> dict:
        out = {}
        for x in q.vars:
            if x in kf and x in kg:
                out[x] = bottom
            elif x in kf:
                out[x] = a
            elif x in kg:
                out[x] = b
            else:
                out[x] = f"({a},{b})"
        return out
    return theta


def gen_lhard_gadget(q: Query, F: str, G: str, R_pairs: Iterable, S_pairs: Iterable, ns: str = "") -> Database:
    """db_{R,S}: every atom other than F, G under each pair of R and S, F under
    the pairs of R, G under the pairs of S.  F and G must attack each other."""
    g = attack_graph(q)
    if not (q.has(F) and q.has(G) and g.attacks(F, G) and g.attacks(G, F)):
        raise UsageError(f"{F} and {G} do not attack each other in {q}")
    Fa, Ga = q.atom(F), q.atom(G)
    theta = _bival(q, Fa, Ga, f"{ns}⊥")
    R_pairs = [(f"{ns}{a}", f"{ns}{b}") for a, b in R_pairs]
    S_pairs = [(f"{ns}{a}", f"{ns}{b}") for a, b in S_pairs]
    facts = set()
    for a, b in R_pairs + S_pairs:
        facts |= {apply_valuation(h, theta(a, b)) for h in q if h.name not in (F, G)}
    facts |= {apply_valuation(Fa, theta(a, b)) for a, b in R_pairs}
    facts |= {apply_valuation(Ga, theta(a, b)) for a, b in S_pairs}
    return Database(facts)
