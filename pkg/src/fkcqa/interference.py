"""Detection of block-interfering foreign keys."""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .analysis import Position, connectivity_graph, lclosure, nonconstant_vars
from .model import ForeignKey, Query, Var
from .obedience import atom_obedient, nonkey_positions, syntactic_obedient


@dataclass
class Interference:
    fk: ForeignKey
    via: str  # "3a" or "3b"
    details: dict = field(default_factory=dict)


@dataclass
class InterferenceReport:
    interfering: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.interfering)

    @property
    def fks(self) -> set:
        return {r.fk for r in self.interfering}


def find_block_interference(q: Query, fks) -> InterferenceReport:
    report = InterferenceReport()
    fks = list(fks)
    for fk in sorted(lclosure(fks, q.relations), key=ForeignKey.sort_key):
        if fk.weak or not q.has(fk.source.name) or not q.has(fk.target.name):
            continue
        n_atom, o_atom = q.atom(fk.source.name), q.atom(fk.target.name)
        if not atom_obedient(o_atom, q, fks).obedient:
            continue
        tj = n_atom.term_at(fk.pos)
        rest = q.without(n_atom.name)
        # FDs over all of q, variable universe over q minus N
        V = nonconstant_vars(q, rest)
        if not isinstance(tj, Var) or tj not in V:
            continue
        others = nonkey_positions(n_atom) - {Position(n_atom.name, fk.pos)}
        verdict = syntactic_obedient(others, q, fks)
        if not verdict.obedient:
            report.interfering.append(Interference(fk, "3a", {"positions": sorted(others),
                                                              "violations": verdict.violations}))
        g = connectivity_graph(V, rest)
        for i, ti in enumerate(n_atom.key, 1):
            if isinstance(ti, Var) and ti in g and nx.has_path(g, ti, tj):
                report.interfering.append(Interference(fk, "3b", {"key_index": i,
                                                                  "path": nx.shortest_path(g, ti, tj)}))
                break
    return report
