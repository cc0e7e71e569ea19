"""Description logic syntax: roles, role hierarchies, concepts.

Concepts are immutable values.  Their canonical s-expression text doubles as
the total order used for sorting and printing, so two concepts compare equal
exactly when they print the same.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Union


# --------------------------------------------------------------------- roles

@dataclass(frozen=True)
class Role:
    name: str
    inverse: bool = False

    def inv(self) -> "Role":
        return Role(self.name, not self.inverse)

    def __str__(self) -> str:
        return f"(inv {self.name})" if self.inverse else self.name

    def __lt__(self, other: "Role") -> bool:
        return (self.name, self.inverse) < (other.name, other.inverse)


def inv(r: Role) -> Role:
    return r.inv()


@dataclass(frozen=True)
class RoleConj:
    """A non-empty conjunction of roles."""

    roles: frozenset

    def __post_init__(self):
        if not self.roles:
            raise ValueError("empty role conjunction")

    def __str__(self) -> str:
        return self._text

    @cached_property
    def _text(self) -> str:
        rs = sorted(self.roles)
        if len(rs) == 1:
            return str(rs[0])
        return "(rconj " + " ".join(map(str, rs)) + ")"

    def __lt__(self, other) -> bool:
        return str(self) < str(other)

    def __iter__(self):
        return iter(sorted(self.roles))

    def __len__(self):
        return len(self.roles)

    def inv(self) -> "RoleConj":
        return RoleConj(frozenset(r.inv() for r in self.roles))


def rconj(*roles: Role) -> RoleConj:
    return RoleConj(frozenset(roles))


def as_conj(w: Union[Role, RoleConj, "RoleExpr"]):
    return RoleConj(frozenset([w])) if isinstance(w, Role) else w


# Boolean role expressions, used only in translated knowledge bases.

class RoleExpr:
    def __str__(self) -> str:
        return "(boolean-role " + self.body() + ")"

    def body(self) -> str:
        raise NotImplementedError

    def __lt__(self, other) -> bool:
        return str(self) < str(other)

    @cached_property
    def dnf(self) -> frozenset:
        """Disjuncts as (positive roles, negative roles) pairs."""
        return frozenset(
            (pos, neg) for pos, neg in _dnf(self) if not pos & neg)

    def is_safe(self) -> bool:
        return all(pos for pos, _ in self.dnf)


@dataclass(frozen=True)
class RLit(RoleExpr):
    role: Role

    def body(self) -> str:
        return str(self.role)


@dataclass(frozen=True)
class RNot(RoleExpr):
    operand: RoleExpr

    def body(self) -> str:
        return "(not " + self.operand.body() + ")"


@dataclass(frozen=True)
class RAnd(RoleExpr):
    operands: frozenset

    def body(self) -> str:
        return "(and " + " ".join(sorted(o.body() for o in self.operands)) + ")"


@dataclass(frozen=True)
class ROr(RoleExpr):
    operands: frozenset

    def body(self) -> str:
        return "(or " + " ".join(sorted(o.body() for o in self.operands)) + ")"


def _dnf(e: RoleExpr, negated: bool = False) -> list:
    if isinstance(e, RLit):
        s = frozenset([e.role])
        return [(frozenset(), s)] if negated else [(s, frozenset())]
    if isinstance(e, RNot):
        return _dnf(e.operand, not negated)
    conj = isinstance(e, RAnd) != negated
    parts = [_dnf(o, negated) for o in sorted(e.operands, key=lambda o: o.body())]
    if not conj:
        return [d for p in parts for d in p]
    out = [(frozenset(), frozenset())]
    for p in parts:
        out = [(a[0] | b[0], a[1] | b[1]) for a in out for b in p]
    return out


def role_dnf(w) -> frozenset:
    """DNF of a role slot (a role conjunction or a boolean role expression)."""
    if isinstance(w, RoleConj):
        return frozenset([(w.roles, frozenset())])
    if isinstance(w, Role):
        return frozenset([(frozenset([w]), frozenset())])
    return w.dnf


def role_and(roles: Iterable[Role]) -> RoleExpr:
    lits = frozenset(RLit(r) for r in roles)
    if len(lits) == 1:
        return next(iter(lits))
    return RAnd(lits)


# ------------------------------------------------------------------- concepts

class Concept:
    """Base class of the concept AST."""

    def __str__(self) -> str:
        return self._text

    def __repr__(self) -> str:
        return self._text

    def __lt__(self, other: "Concept") -> bool:
        return self._text < other._text

    def __le__(self, other: "Concept") -> bool:
        return self._text <= other._text

    def __gt__(self, other: "Concept") -> bool:
        return self._text > other._text

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Concept) and self._text == other._text)

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash(self._text)

    @cached_property
    def _text(self) -> str:
        return self.render()

    def render(self) -> str:
        raise NotImplementedError

    def children(self) -> tuple:
        return ()

    @property
    def depth(self) -> int:
        return 0


@dataclass(frozen=True, eq=False, repr=False)
class Top(Concept):
    def render(self):
        return "top"


@dataclass(frozen=True, eq=False, repr=False)
class Bottom(Concept):
    def render(self):
        return "bottom"


TOP = Top()
BOTTOM = Bottom()


@dataclass(frozen=True, eq=False, repr=False)
class Atomic(Concept):
    name: str

    def render(self):
        return self.name


@dataclass(frozen=True, eq=False, repr=False)
class Not(Concept):
    operand: Concept

    def render(self):
        return f"(not {self.operand})"

    def children(self):
        return (self.operand,)

    @property
    def depth(self):
        return self.operand.depth


@dataclass(frozen=True, eq=False, repr=False)
class And(Concept):
    operands: frozenset

    def render(self):
        return "(and " + " ".join(sorted(map(str, self.operands))) + ")"

    def children(self):
        return tuple(sorted(self.operands))

    @property
    def depth(self):
        return max(c.depth for c in self.operands)


@dataclass(frozen=True, eq=False, repr=False)
class Or(Concept):
    operands: frozenset

    def render(self):
        return "(or " + " ".join(sorted(map(str, self.operands))) + ")"

    def children(self):
        return tuple(sorted(self.operands))

    @property
    def depth(self):
        return max(c.depth for c in self.operands)


@dataclass(frozen=True, eq=False, repr=False)
class Exists(Concept):
    role: object
    filler: Concept

    def render(self):
        return f"(some {self.role} {self.filler})"

    def children(self):
        return (self.filler,)

    @property
    def depth(self):
        return 1 + self.filler.depth


@dataclass(frozen=True, eq=False, repr=False)
class Forall(Concept):
    role: object
    filler: Concept

    def render(self):
        return f"(all {self.role} {self.filler})"

    def children(self):
        return (self.filler,)

    @property
    def depth(self):
        return 1 + self.filler.depth


@dataclass(frozen=True, eq=False, repr=False)
class AtLeast(Concept):
    n: int
    role: object
    filler: Concept

    def render(self):
        return f"(at-least {self.n} {self.role} {self.filler})"

    def children(self):
        return (self.filler,)

    @property
    def depth(self):
        return 1 + self.filler.depth


@dataclass(frozen=True, eq=False, repr=False)
class AtMost(Concept):
    n: int
    role: object
    filler: Concept

    def render(self):
        return f"(at-most {self.n} {self.role} {self.filler})"

    def children(self):
        return (self.filler,)

    @property
    def depth(self):
        return 1 + self.filler.depth


Quantified = (Exists, Forall, AtLeast, AtMost)


def conj(*cs: Concept) -> Concept:
    """Flattening, deduplicating conjunction; the empty conjunction is top."""
    out = set()
    for c in cs:
        if isinstance(c, And):
            out |= c.operands
        elif isinstance(c, Bottom):
            return BOTTOM
        elif not isinstance(c, Top):
            out.add(c)
    if not out:
        return TOP
    if len(out) == 1:
        return out.pop()
    return And(frozenset(out))


def disj(*cs: Concept) -> Concept:
    out = set()
    for c in cs:
        if isinstance(c, Or):
            out |= c.operands
        elif isinstance(c, Top):
            return TOP
        elif not isinstance(c, Bottom):
            out.add(c)
    if not out:
        return BOTTOM
    if len(out) == 1:
        return out.pop()
    return Or(frozenset(out))


def some(w, c: Concept = TOP) -> Exists:
    return Exists(as_conj(w), c)


def only(w, c: Concept) -> Forall:
    return Forall(as_conj(w), c)


def at_least(n: int, w, c: Concept = TOP) -> Concept:
    if n < 0:
        raise ValueError("negative number restriction")
    if n == 0:
        return TOP
    return AtLeast(n, as_conj(w), c)


def at_most(n: int, w, c: Concept = TOP) -> Concept:
    if n < 0:
        raise ValueError("negative number restriction")
    return AtMost(n, as_conj(w), c)


def nnf(c: Concept) -> Concept:
    """Negation normal form; negation only directly above concept names."""
    return _nnf(c, False)


def negate(c: Concept) -> Concept:
    """The NNF of the negation of c."""
    return _nnf(c, True)


def _nnf(c: Concept, neg: bool) -> Concept:
    if isinstance(c, Top):
        return BOTTOM if neg else TOP
    if isinstance(c, Bottom):
        return TOP if neg else BOTTOM
    if isinstance(c, Atomic):
        return Not(c) if neg else c
    if isinstance(c, Not):
        return _nnf(c.operand, not neg)
    if isinstance(c, And):
        parts = [_nnf(o, neg) for o in c.operands]
        return disj(*parts) if neg else conj(*parts)
    if isinstance(c, Or):
        parts = [_nnf(o, neg) for o in c.operands]
        return conj(*parts) if neg else disj(*parts)
    if isinstance(c, Exists):
        return Forall(c.role, _nnf(c.filler, True)) if neg else Exists(c.role, _nnf(c.filler, False))
    if isinstance(c, Forall):
        return Exists(c.role, _nnf(c.filler, True)) if neg else Forall(c.role, _nnf(c.filler, False))
    if isinstance(c, AtLeast):
        f = _nnf(c.filler, False)
        if not neg:
            return AtLeast(c.n, c.role, f)
        if c.n == 0:
            return BOTTOM
        return AtMost(c.n - 1, c.role, f)
    if isinstance(c, AtMost):
        f = _nnf(c.filler, False)
        return AtLeast(c.n + 1, c.role, f) if neg else AtMost(c.n, c.role, f)
    raise TypeError(f"not a concept: {c!r}")


def subconcepts(c: Concept) -> Iterator[Concept]:
    stack = [c]
    seen = set()
    while stack:
        d = stack.pop()
        if d in seen:
            continue
        seen.add(d)
        yield d
        stack.extend(d.children())


def concept_names(c: Concept) -> set:
    return {d.name for d in subconcepts(c) if isinstance(d, Atomic)}


def concept_roles(c: Concept) -> set:
    out = set()
    for d in subconcepts(c):
        if isinstance(d, Quantified):
            for pos, neg in role_dnf(d.role):
                out |= pos | neg
    return out


# ---------------------------------------------------------------- role boxes

@dataclass(frozen=True)
class RBox:
    """Role inclusions plus the set of transitive role names."""

    inclusions: frozenset = field(default_factory=frozenset)
    transitive: frozenset = field(default_factory=frozenset)

    @cached_property
    def roles(self) -> frozenset:
        out = set()
        for r, s in self.inclusions:
            out |= {r, s, r.inv(), s.inv()}
        for n in self.transitive:
            out |= {Role(n), Role(n, True)}
        return frozenset(out)

    @cached_property
    def _supers(self) -> dict:
        edges: dict = {r: set() for r in self.roles}
        for r, s in self.inclusions:
            edges[r].add(s)
            edges[r.inv()].add(s.inv())
        sup = {}
        for r in self.roles:
            seen = {r}
            stack = [r]
            while stack:
                x = stack.pop()
                for y in edges[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            sup[r] = frozenset(seen)
        return sup

    @cached_property
    def _subs(self) -> dict:
        sub: dict = {r: set() for r in self.roles}
        for r, ss in self._supers.items():
            for s in ss:
                sub[s].add(r)
        return {r: frozenset(v) for r, v in sub.items()}

    def supers(self, r: Role) -> frozenset:
        return self._supers.get(r, frozenset([r]))

    def subs(self, r: Role) -> frozenset:
        return self._subs.get(r, frozenset([r]))

    def sub_role(self, r: Role, s: Role) -> bool:
        return s in self.supers(r)

    def equivalent(self, r: Role, s: Role) -> bool:
        return self.sub_role(r, s) and self.sub_role(s, r)

    @cached_property
    def trans_roles(self) -> frozenset:
        base = {Role(n) for n in self.transitive} | {Role(n, True) for n in self.transitive}
        out = set()
        for s in self.roles:
            if any(self.equivalent(r, s) for r in base):
                out.add(s)
        return frozenset(out)

    def is_transitive(self, r: Role) -> bool:
        return r in self.trans_roles

    def is_simple(self, r: Role) -> bool:
        return not any(s in self.trans_roles for s in self.subs(r))

    def transitive_subroles(self, r: Role) -> tuple:
        return tuple(sorted(s for s in self.subs(r) if s in self.trans_roles))

    def __str__(self) -> str:
        parts = [f"(subrole {r} {s})" for r, s in sorted(self.inclusions)]
        parts += [f"(transitive {n})" for n in sorted(self.transitive)]
        return "(rbox" + "".join(" " + p for p in parts) + ")"


def rbox(inclusions: Iterable = (), transitive: Iterable = ()) -> RBox:
    return RBox(frozenset(inclusions), frozenset(transitive))


def sub_role_rel(rb: RBox) -> frozenset:
    """All pairs (r, s) with r a sub-role of s, over the roles rb mentions."""
    return frozenset((r, s) for r in rb.roles for s in rb.supers(r))


def trans_roles(rb: RBox) -> frozenset:
    return rb.trans_roles


def is_simple(r: Role, rb: RBox) -> bool:
    return rb.is_simple(r)


def tc_set(w: RoleConj, rb: RBox) -> frozenset:
    """Conjunctions picking one transitive sub-role per conjunct of w."""
    options = [rb.transitive_subroles(r) for r in sorted(w.roles)]
    return frozenset(RoleConj(frozenset(choice)) for choice in product(*options))


def closure(c: Concept, rb: RBox) -> frozenset:
    """Sub-concepts of c, their negations, and the universal restrictions
    over transitive sub-roles needed to propagate them."""
    out = set()
    stack = list(subconcepts(c))
    while stack:
        d = stack.pop()
        if d in out:
            continue
        out.add(d)
        stack.append(negate(d))
        if isinstance(d, Forall) and isinstance(d.role, RoleConj):
            for t in tc_set(d.role, rb):
                stack.append(Forall(t, d.filler))
    return frozenset(out)
