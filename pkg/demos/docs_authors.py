"""Documents, authorship and authors: a query that is certain in no repair.

Run from the repository root:  python3 demos/docs_authors.py
"""

from pathlib import Path

from fkcqa.classify import classify
from fkcqa.model import Database
from fkcqa.oracle import oracle_certain
from fkcqa.rewrite import build_plan, certain_eval
from fkcqa.textio import parse_db, parse_problem, serialize_db

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

spec = parse_problem((FIXTURES / "docs_authors.problem").read_text())
db = parse_db((FIXTURES / "docs_authors.db").read_text(), spec.schemas)

print("query:", spec.query)
print("foreign keys:", ", ".join(map(str, spec.fks)))
print()
print(serialize_db(db))

c = classify(spec.query, spec.fks)
print("classification:", c.verdict)

plan = build_plan(spec.query, spec.fks)
print("reduction steps:", [s.kind for s in plan.steps] or "none")
print("rewriting says:", "yes" if certain_eval(plan, db) else "no")

res = oracle_certain(db, spec.query, spec.fks)
print("oracle says:", res.answer.value)
print("\na repair where no 2016 document has an author named Jeff:")
print(serialize_db(res.counterexample))

# with the Jeffrey spelling gone, o1 has a single AUTHORS fact and every
# repair keeps the Jeff row together with R(d1, o1)
fixed = Database(f for f in db.facts if "Jeffrey" not in f.values)
print("without the Jeffrey row:", oracle_certain(fixed, spec.query, spec.fks).answer.value,
      "/ rewriting:", "yes" if certain_eval(plan, fixed) else "no")
