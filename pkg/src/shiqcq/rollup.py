"""Rolling tree-shaped queries up into concepts and grounding candidates."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterable

from .dl import TOP, Concept, RoleConj, conj, Exists
from .errors import ResourceLimit
from .query import ConceptAtom, Ind, Query, RoleAtom, Term, Var, rep
from .rewrite import (
    DEFAULT_BUDGET, Candidate, forest_rewritings, loop_rewritings,
    split_rewritings, subquery_at, tree_mapping,
)


class NotTreeShaped(ValueError):
    pass


@dataclass(frozen=True)
class TreeQuery:
    concept: Concept

    def __str__(self) -> str:
        return f"(query (concept {self.concept} v))"


def query_concept(q: Query, root: Term) -> Concept:
    """The concept that an element satisfies iff q matches with root there."""
    if tree_mapping(q, root) is None:
        raise NotTreeShaped(str(q))
    cls = q.cls
    kids: dict = {}
    start = cls[root]
    seen = {start}
    frontier = [start]
    adj: dict = {}
    for a in q.role_atoms:
        adj.setdefault(cls[a.t1], set()).add(cls[a.t2])
        adj.setdefault(cls[a.t2], set()).add(cls[a.t1])
    while frontier:
        c = frontier.pop()
        for k in adj.get(c, ()):
            if k not in seen:
                seen.add(k)
                kids.setdefault(c, []).append(k)
                frontier.append(k)

    def build(c) -> Concept:
        parts = [a.concept for a in q.concept_atoms if cls[a.term] == c]
        for k in kids.get(c, ()):
            roles = set()
            for a in q.role_atoms:
                if cls[a.t1] == c and cls[a.t2] == k:
                    roles.add(a.role)
                elif cls[a.t1] == k and cls[a.t2] == c:
                    roles.add(a.role.inv())
            parts.append(Exists(RoleConj(frozenset(roles)), build(k)))
        return conj(*parts)

    return build(start)


def ground_mappings(cand: Candidate, individuals: Iterable[str]) -> list:
    """Maps from root classes to individuals, injective, fixing individuals."""
    q = cand.query
    inds = sorted(individuals)
    root_classes = [c for c in q.classes if c <= cand.roots]
    fixed = {}
    free = []
    for c in root_classes:
        named = [t for t in c if isinstance(t, Ind)]
        if named:
            fixed[c] = named[0].name
        else:
            free.append(c)
    spare = [a for a in inds if a not in fixed.values()]
    out = []
    for image in permutations(spare, len(free)):
        m = dict(fixed)
        m.update(zip(free, image))
        out.append({t: Ind(m[c]) for c in root_classes for t in c})
    return out


def _template(cand: Candidate) -> tuple:
    """Concept atoms of the root classes and the root-to-root role atoms."""
    q, roots = cand.query, cand.roots
    concepts = []
    for c in q.classes:
        if not c <= roots:
            continue
        t = rep(c)
        sub = subquery_at(q, t, roots)
        concepts.append((TOP if sub is None else query_concept(sub, t), t))
    roles = [a for a in q.role_atoms if a.t1 in roots and a.t2 in roots]
    return concepts, roles


def ground_query(cand: Candidate, tau: dict, template: tuple | None = None) -> Query:
    concepts, roles = template or _template(cand)
    atoms = {ConceptAtom(c, tau[t]) for c, t in concepts}
    atoms.update(RoleAtom(a.role, tau[a.t1], tau[a.t2]) for a in roles)
    return Query(frozenset(atoms))


def rewritings(q: Query, kb, budget: int | None = None) -> list:
    sr = split_rewritings(q, kb, budget)
    lr = loop_rewritings(sr, kb, budget)
    return forest_rewritings(lr, kb, budget)


def trees_of(q: Query, kb, budget: int | None = None, cands: list | None = None) -> list:
    if q.inds:
        return []
    cands = rewritings(q, kb, budget) if cands is None else cands
    out = {}
    for c in cands:
        if c.roots:
            continue
        for cl in c.query.classes:
            t = rep(cl)
            if isinstance(t, Var) and tree_mapping(c.query, t) is not None:
                tq = TreeQuery(query_concept(c.query, t))
                out.setdefault(str(tq.concept), tq)
    return [out[k] for k in sorted(out)]


def groundings_of(q: Query, kb, budget: int | None = None, cands: list | None = None) -> list:
    cands = rewritings(q, kb, budget) if cands is None else cands
    limit = DEFAULT_BUDGET if budget is None else budget
    out = {}
    for c in cands:
        if not c.roots:
            continue
        taus = ground_mappings(c, kb.individuals)
        template = _template(c) if taus else None
        for tau in taus:
            g = ground_query(c, tau, template)
            out.setdefault(str(g), g)
            if len(out) > limit:
                raise ResourceLimit(f"more than {limit} ground queries")
    return [out[k] for k in sorted(out)]


def candidate_groundings(c: Candidate, individuals) -> list:
    """Ground queries contributed by a single candidate."""
    if not c.roots:
        return []
    taus = ground_mappings(c, individuals)
    template = _template(c) if taus else None
    return [ground_query(c, tau, template) for tau in taus]
