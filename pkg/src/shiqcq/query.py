"""Conjunctive queries: terms, atoms, equality classes and connectivity."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable

from .dl import Concept, Role


@dataclass(frozen=True)
class Var:
    name: str

    @property
    def fresh(self) -> bool:
        # names starting with "_" are reserved for variables introduced by rewriting
        return self.name.startswith("_")

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class Ind:
    name: str

    fresh = False

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return self.name


Term = Var | Ind


def term_key(t: Term) -> tuple:
    return (isinstance(t, Var), t.fresh, t.name)


class Atom:
    def terms(self) -> tuple:
        raise NotImplementedError

    def subst(self, m: dict) -> "Atom":
        raise NotImplementedError

    def __lt__(self, other: "Atom") -> bool:
        return self._text < other._text

    @cached_property
    def _text(self) -> str:
        return self.render()

    def __str__(self) -> str:
        return self._text

    def __repr__(self) -> str:
        return str(self)


@dataclass(frozen=True, repr=False)
class ConceptAtom(Atom):
    concept: Concept
    term: Term

    def terms(self):
        return (self.term,)

    def subst(self, m):
        return ConceptAtom(self.concept, m.get(self.term, self.term))

    def render(self):
        return f"(concept {self.concept} {self.term})"


@dataclass(frozen=True, repr=False)
class RoleAtom(Atom):
    """r(t1, t2); always stored with a non-inverse role name."""

    role: Role
    t1: Term
    t2: Term

    def __post_init__(self):
        if self.role.inverse:
            r, a, b = self.role.inv(), self.t2, self.t1
            object.__setattr__(self, "role", r)
            object.__setattr__(self, "t1", a)
            object.__setattr__(self, "t2", b)

    def terms(self):
        return (self.t1, self.t2)

    def subst(self, m):
        return RoleAtom(self.role, m.get(self.t1, self.t1), m.get(self.t2, self.t2))

    def render(self):
        return f"(role {self.role} {self.t1} {self.t2})"


@dataclass(frozen=True, repr=False)
class EqAtom(Atom):
    t1: Term
    t2: Term

    def __post_init__(self):
        if term_key(self.t2) < term_key(self.t1):
            a, b = self.t2, self.t1
            object.__setattr__(self, "t1", a)
            object.__setattr__(self, "t2", b)

    def terms(self):
        return (self.t1, self.t2)

    def subst(self, m):
        return EqAtom(m.get(self.t1, self.t1), m.get(self.t2, self.t2))

    def render(self):
        return f"(eq {self.t1} {self.t2})"


@dataclass(frozen=True)
class Query:
    atoms: frozenset

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a query needs at least one atom")

    @cached_property
    def terms(self) -> tuple:
        return tuple(sorted({t for a in self.atoms for t in a.terms()}, key=term_key))

    @cached_property
    def vars(self) -> tuple:
        return tuple(t for t in self.terms if isinstance(t, Var))

    @cached_property
    def inds(self) -> tuple:
        return tuple(t for t in self.terms if isinstance(t, Ind))

    @cached_property
    def role_atoms(self) -> tuple:
        return tuple(sorted(a for a in self.atoms if isinstance(a, RoleAtom)))

    @cached_property
    def concept_atoms(self) -> tuple:
        return tuple(sorted(a for a in self.atoms if isinstance(a, ConceptAtom)))

    @cached_property
    def cls(self) -> dict:
        """Term -> its equality class (a frozenset of terms)."""
        parent = {t: t for t in self.terms}

        def find(t):
            while parent[t] != t:
                parent[t] = parent[parent[t]]
                t = parent[t]
            return t

        for a in self.atoms:
            if isinstance(a, EqAtom):
                x, y = find(a.t1), find(a.t2)
                if x != y:
                    parent[x] = y
        groups: dict = {}
        for t in self.terms:
            groups.setdefault(find(t), set()).add(t)
        out = {}
        for g in groups.values():
            fg = frozenset(g)
            for t in g:
                out[t] = fg
        return out

    @cached_property
    def classes(self) -> tuple:
        seen = {}
        for c in self.cls.values():
            seen[c] = None
        return tuple(sorted(seen, key=lambda c: term_key(rep(c))))

    def neighbours(self, t: Term) -> set:
        """Terms u such that some role atom links [t] and [u]."""
        return self._adj.get(self.cls[t], set())

    @cached_property
    def _adj(self) -> dict:
        adj: dict = {}
        for a in self.role_atoms:
            c1, c2 = self.cls[a.t1], self.cls[a.t2]
            adj.setdefault(c1, set()).update(c2)
            adj.setdefault(c2, set()).update(c1)
        return adj

    def __str__(self) -> str:
        vs = " ".join(sorted(v.name for v in self.vars))
        body = " ".join(sorted(map(str, self.atoms)))
        return f"(query (vars{' ' + vs if vs else ''}) (atoms {body}))"

    def __len__(self) -> int:
        return len(self.atoms)

    def subst(self, m: dict) -> "Query":
        return Query(frozenset(a.subst(m) for a in self.atoms))


def rep(c: Iterable[Term]) -> Term:
    """Canonical representative of a class: individuals first, then by name."""
    return min(c, key=term_key)


def query(*atoms: Atom) -> Query:
    return Query(frozenset(atoms))


def eq_classes(q: Query) -> tuple:
    return q.classes


def din_holds(atom: Atom, q: Query) -> bool:
    """Whether atom is in q up to equality of terms (and role inversion)."""
    cls = q.cls
    if any(t not in cls for t in atom.terms()):
        return False
    if isinstance(atom, ConceptAtom):
        c = cls[atom.term]
        return any(b.concept == atom.concept and cls[b.term] == c for b in q.concept_atoms)
    if isinstance(atom, EqAtom):
        return cls[atom.t1] == cls[atom.t2]
    c1, c2 = cls[atom.t1], cls[atom.t2]
    return any(b.role == atom.role and cls[b.t1] == c1 and cls[b.t2] == c2
               for b in q.role_atoms)


def connected_components(q: Query) -> list:
    parent = {t: t for t in q.terms}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for a in q.atoms:
        ts = a.terms()
        for t in ts[1:]:
            x, y = find(ts[0]), find(t)
            if x != y:
                parent[x] = y
    groups: dict = {}
    for a in q.atoms:
        groups.setdefault(find(a.terms()[0]), set()).add(a)
    comps = [Query(frozenset(g)) for g in groups.values()]
    return sorted(comps, key=lambda c: min(map(str, c.atoms)))


def is_connected(q: Query) -> bool:
    return len(connected_components(q)) == 1


def is_cyclic(q: Query) -> bool:
    """A closed walk over role atoms through at least three distinct terms."""
    terms = q.terms
    adj = {t: [u for u in terms if u in q.neighbours(t)] for t in terms}

    def search(start, cur, path):
        for u in adj[cur]:
            if u == start:
                if len(path) >= 2:
                    return True
            elif u not in path:
                path.append(u)
                if search(start, u, path):
                    return True
                path.pop()
        return False

    for t in terms:
        for u in adj[t]:
            if search(t, u, [u]):
                return True
    return False


@dataclass(frozen=True)
class UCQ:
    disjuncts: tuple

    def __str__(self) -> str:
        if len(self.disjuncts) == 1:
            return str(self.disjuncts[0])
        return "(ucq " + " ".join(map(str, self.disjuncts)) + ")"

    def __iter__(self):
        return iter(self.disjuncts)

    def __len__(self):
        return len(self.disjuncts)


def ucq(*qs: Query) -> UCQ:
    return UCQ(tuple(qs))


def rename_apart(u: UCQ) -> UCQ:
    """Make the variable names of distinct disjuncts disjoint."""
    used: set = set()
    out = []
    for q in u.disjuncts:
        m = {}
        for v in q.vars:
            name = v.name
            k = 1
            while name in used:
                name = f"{v.name}{k}"
                k += 1
            used.add(name)
            if name != v.name:
                m[v] = Var(name)
        out.append(q.subst(m) if m else q)
    return UCQ(tuple(out))


def ucq_to_cnf(u: UCQ) -> list:
    """Conjuncts of connected-disjunct UCQs equivalent to u."""
    parts = [connected_components(q) for q in u.disjuncts]
    return [UCQ(tuple(choice)) for choice in product(*parts)]


@dataclass(frozen=True)
class AnswerQuery:
    query: Query
    answer_vars: tuple

    def __post_init__(self):
        missing = [v for v in self.answer_vars if v not in self.query.vars]
        if missing:
            raise ValueError(f"answer variable not in query: {missing[0]}")

    def __str__(self) -> str:
        av = "".join(" " + v.name for v in self.answer_vars)
        rest = "".join(" " + n for n in sorted(v.name for v in self.query.vars
                                                  if v not in self.answer_vars))
        body = " ".join(sorted(map(str, self.query.atoms)))
        return f"(query (answer-vars{av}) (vars{rest}) (atoms {body}))"
