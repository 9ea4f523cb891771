"""The staircase family for q = {N(x, 'c', y), O(y)} with N[3] -> O.

The query is not first-order rewritable.  Its certainty problem is
equivalent to the complement of dual-Horn satisfiability, so a
polynomial solver exists; here it is compared with the repair oracle.
"""

from fkcqa.classify import classify
from fkcqa.gadgets import db_to_dualhorn, reach_problem, special_solver
from fkcqa.oracle import oracle_certain
from fkcqa.textio import parse_db


def staircase(n, box, with_o1=True):
    lines = []
    for i in range(1, n + 1):
        lines += [f"N(b{i}, c, {i})", f"N(b{i}, d, {i + 1})"]
    lines.append(f"N(b{n + 1}, {box}, {n + 1})")
    if with_o1:
        lines.append("O(1)")
    return "\n".join(lines)


q, fks = reach_problem()
schemas = {a.name: a.rel for a in q}
c = classify(q, fks)
print(f"{q} with {fks[0]}: {c.verdict} {sorted(c.hardness_marks)}")
solve = special_solver(q, fks)

print(f"{'instance':<14}{'solver':>8}{'oracle':>8}  formula")
for n in (1, 2, 3):
    for box in "cd":
        for o1 in (True, False):
            db = parse_db(staircase(n, box, o1), schemas)
            name = f"n={n} {box}" + ("" if o1 else " prime")
            fast = "yes" if solve(db) else "no"
            slow = oracle_certain(db, q, fks).answer.value
            print(f"{name:<14}{fast:>8}{slow:>8}  {db_to_dualhorn(db)}")
