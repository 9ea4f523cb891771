"""Hardness gadgets: graph reachability and dual-Horn formulas turned into databases."""

from fkcqa.gadgets import (
    DirectedGraphInput, dualhorn_to_db, gen_reachability_gadget, parse_dualhorn, reach_problem,
    solve_dualhorn,
)
from fkcqa.oracle import oracle_certain
from fkcqa.textio import serialize_db

q, fks = reach_problem()

g = DirectedGraphInput({"s", "1", "2", "t"}, {("s", "1"), ("s", "2"), ("2", "t")}, "s", "t")
db = gen_reachability_gadget(g)
print("graph edges:", sorted(g.edges))
print(serialize_db(db))
print("t reachable from s:", g.reachable())
print("certain:", oracle_certain(db, q, fks).answer.value)

# removing the edge into t makes every repair satisfy the query
g2 = DirectedGraphInput(g.vertices, g.edges - {("2", "t")}, "s", "t")
print("\nwithout 2 -> t, certain:", oracle_certain(gen_reachability_gadget(g2), q, fks).answer.value)

for text in ("p\n-p | q", "p\n-p | q\n-q"):
    phi = parse_dualhorn(text)
    res = oracle_certain(dualhorn_to_db(phi), q, fks)
    print(f"\n{phi}: satisfiable={solve_dualhorn(phi)}, certain={res.answer.value}")
