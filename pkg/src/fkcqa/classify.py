"""FO / L-hard / NL-hard classification of certainty(q, FK)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import attack_graph, is_acyclic
from .interference import InterferenceReport, find_block_interference
from .model import ForeignKey, Query, UsageError, is_about

FO = "FO"
HARD = "HARD"
L_HARD = "L_HARD"
NL_HARD = "NL_HARD"


@dataclass
class Classification:
    verdict: str
    hardness_marks: set = field(default_factory=set)
    attack_cycle: list | None = None
    interference: InterferenceReport = field(default_factory=InterferenceReport)
    fo_plan: object = None

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "hardness_marks": sorted(self.hardness_marks),
            "attack_cycle": self.attack_cycle,
            "block_interference": [
                {"fk": str(r.fk), "via": r.via, "details": _plain(r.details)}
                for r in self.interference.interfering
            ],
        }
        if self.fo_plan is not None:
            out["fo_plan"] = self.fo_plan.to_json()
        return out


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [_plain(v) for v in x]
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return str(x)


def validate(q: Query, fks) -> None:
    if len(q) == 0:
        raise UsageError("empty query")
    ok, problems = is_about(fks, q)
    if not ok:
        raise UsageError("foreign keys are not about the query: " + "; ".join(problems))


def classify(q: Query, fks, with_plan: bool = False) -> Classification:
    fks = list(fks)
    validate(q, fks)
    acyclic, cycle = is_acyclic(attack_graph(q))
    report = find_block_interference(q, fks)
    marks = set()
    if not acyclic:
        marks.add(L_HARD)
    if report:
        marks.add(NL_HARD)
    c = Classification(HARD if marks else FO, marks, cycle, report)
    if with_plan and c.verdict == FO:
        from .rewrite import build_plan
        c.fo_plan = build_plan(q, fks)
    return c
