"""Sound structural implication between rolled-up queries.

Used to drop disjuncts of a rewriting that imply other disjuncts: the
disjunction stays equivalent and the extended knowledge bases get smaller.
The check is incomplete on purpose; it only has to be sound.
"""

from __future__ import annotations

from itertools import product

from .dl import TOP, And, Concept, Exists, RBox, RoleConj
from .query import ConceptAtom, Query, RoleAtom


def _conjuncts(c: Concept) -> tuple:
    if isinstance(c, And):
        return tuple(c.operands)
    if c == TOP:
        return ()
    return (c,)


def _edges(c: Concept) -> list:
    return [d for d in _conjuncts(c) if isinstance(d, Exists) and isinstance(d.role, RoleConj)]


class Subsumer:
    def __init__(self, rb: RBox):
        self.rb = rb
        self._cache: dict = {}
        self._occ: dict = {}

    def covers(self, w1: RoleConj, w2: RoleConj) -> bool:
        """Every role of w2 is implied by some role of w1."""
        return all(any(self.rb.sub_role(r1, r2) for r1 in w1.roles) for r2 in w2.roles)

    def implies(self, c1: Concept, c2: Concept) -> bool:
        """c1 is subsumed by c2 (structural, sound)."""
        key = (c1, c2)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._implies(c1, c2)
            self._cache[key] = hit
        return hit

    def _implies(self, c1: Concept, c2: Concept) -> bool:
        if c1 == c2 or c2 == TOP:
            return True
        mine = set(_conjuncts(c1))
        for d2 in _conjuncts(c2):
            if d2 in mine:
                continue
            if isinstance(d2, Exists) and isinstance(d2.role, RoleConj):
                if not self._witness(c1, d2):
                    return False
            else:
                return False
        return True

    def _witness(self, c1: Concept, d2: Exists) -> bool:
        for d1 in _edges(c1):
            if self.covers(d1.role, d2.role) and self.implies(d1.filler, d2.filler):
                return True
        # longer paths whose every edge carries a transitive sub-role of each conjunct
        options = [self.rb.transitive_subroles(r) for r in sorted(d2.role.roles)]
        for choice in product(*options):
            want = RoleConj(frozenset(choice))
            seen = set()
            stack = [(d1.filler, 1) for d1 in _edges(c1) if self.covers(d1.role, want)]
            while stack:
                node, depth = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                if depth >= 2 and self.implies(node, d2.filler):
                    return True
                for d1 in _edges(node):
                    if self.covers(d1.role, want):
                        stack.append((d1.filler, depth + 1))
        return False

    def occurs(self, inner: Concept, outer: Concept) -> bool:
        """Some element described by outer (or below it) satisfies inner."""
        key = (inner, outer)
        hit = self._occ.get(key)
        if hit is None:
            hit = self.implies(outer, inner) or any(
                self.occurs(inner, d.filler) for d in _edges(outer))
            self._occ[key] = hit
        return hit

    def query_implies(self, g1: Query, g2: Query) -> bool:
        """Ground query g1 implies ground query g2."""
        roles1 = [a for a in g1.atoms if isinstance(a, RoleAtom)]
        for a in g2.atoms:
            if isinstance(a, RoleAtom):
                if not any(self._role_atom_implies(b, a) for b in roles1):
                    return False
            elif isinstance(a, ConceptAtom):
                if a.concept == TOP:
                    continue
                here = [b.concept for b in g1.atoms
                        if isinstance(b, ConceptAtom) and b.term == a.term]
                if not any(self.implies(c, a.concept) for c in here):
                    return False
            else:
                return False
        return True

    def _role_atom_implies(self, b: RoleAtom, a: RoleAtom) -> bool:
        if (b.t1, b.t2) == (a.t1, a.t2) and self.rb.sub_role(b.role, a.role):
            return True
        return (b.t2, b.t1) == (a.t1, a.t2) and self.rb.sub_role(b.role.inv(), a.role)


def prune_trees(trees: list, rb: RBox, sub: Subsumer | None = None) -> list:
    """Drop tree queries that contain a match of another kept tree query."""
    sub = sub or Subsumer(rb)
    order = sorted(trees, key=lambda t: (len(str(t.concept)), str(t.concept)))
    kept: list = []
    for t in order:
        if not any(sub.occurs(k.concept, t.concept) for k in kept):
            kept.append(t)
    return sorted(kept, key=lambda t: str(t.concept))


def prune_groundings(ground: list, trees: list, rb: RBox, sub: Subsumer | None = None) -> list:
    """Drop ground queries that imply a tree query or another ground query."""
    sub = sub or Subsumer(rb)
    live = []
    bad: dict = {}
    for g in ground:
        blocked = False
        for a in g.atoms:
            if isinstance(a, ConceptAtom):
                hit = bad.get(a.concept)
                if hit is None:
                    hit = any(sub.occurs(t.concept, a.concept) for t in trees)
                    bad[a.concept] = hit
                if hit:
                    blocked = True
                    break
        if not blocked:
            live.append(g)
    live.sort(key=lambda g: (len(g.atoms), str(g)))
    kept: list = []
    for g in live:
        if not any(sub.query_implies(g, k) for k in kept):
            kept.append(g)
    final = [g for g in kept
             if not any(h is not g and sub.query_implies(g, h) and not sub.query_implies(h, g)
                        for h in kept)]
    return sorted(final, key=str)
