"""Knowledge bases: TBox axioms, ABox assertions and the KB triple."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .dl import (
    TOP, Concept, RBox, Role, RoleConj, AtLeast, AtMost, nnf,
    subconcepts, concept_roles, concept_names,
)

ANON_INDIVIDUAL = "_a"


class SemanticError(ValueError):
    """Input is well-formed text but violates a logical side condition."""


@dataclass(frozen=True, order=True)
class GCI:
    sub: Concept
    sup: Concept

    def __str__(self) -> str:
        return f"(implies {self.sub} {self.sup})"


@dataclass(frozen=True)
class ConceptAssertion:
    ind: str
    concept: Concept

    def __str__(self) -> str:
        return f"(instance {self.ind} {self.concept})"


@dataclass(frozen=True)
class RoleAssertion:
    role: Role
    a: str
    b: str

    def __str__(self) -> str:
        return f"(related {self.a} {self.role} {self.b})"


@dataclass(frozen=True)
class NegRoleAssertion:
    role: Role
    a: str
    b: str

    def __str__(self) -> str:
        return f"(not-related {self.a} {self.role} {self.b})"


@dataclass(frozen=True)
class Inequality:
    a: str
    b: str

    def __str__(self) -> str:
        return f"(distinct {self.a} {self.b})"


Assertion = ConceptAssertion | RoleAssertion | NegRoleAssertion | Inequality


def assertion_inds(ax) -> tuple:
    if isinstance(ax, ConceptAssertion):
        return (ax.ind,)
    return (ax.a, ax.b)


@dataclass(frozen=True)
class KB:
    tbox: frozenset = field(default_factory=frozenset)
    rbox: RBox = field(default_factory=RBox)
    abox: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not any(assertion_inds(ax) for ax in self.abox):
            object.__setattr__(
                self, "abox", self.abox | {ConceptAssertion(ANON_INDIVIDUAL, TOP)})

    @cached_property
    def individuals(self) -> tuple:
        out = set()
        for ax in self.abox:
            out.update(assertion_inds(ax))
        return tuple(sorted(out))

    def concepts(self):
        for g in self.tbox:
            yield g.sub
            yield g.sup
        for ax in self.abox:
            if isinstance(ax, ConceptAssertion):
                yield ax.concept

    def signature(self) -> tuple[set, set]:
        """Concept names and roles (both directions) used anywhere."""
        names, roles = set(), set(self.rbox.roles)
        for c in self.concepts():
            names |= concept_names(c)
            roles |= concept_roles(c)
        for ax in self.abox:
            if isinstance(ax, (RoleAssertion, NegRoleAssertion)):
                roles.add(ax.role)
        roles |= {r.inv() for r in roles}
        return names, roles

    def validate(self) -> "KB":
        check_simple(self.concepts(), self.rbox)
        return self

    def __str__(self) -> str:
        tb = "".join(" " + str(g) for g in sorted(self.tbox, key=str))
        ab = "".join(" " + s for s in sorted(map(str, self.abox)))
        return f"(kb (tbox{tb}) {self.rbox} (abox{ab}))"


def make_kb(tbox=(), rbox: RBox | None = None, abox=()) -> KB:
    return KB(frozenset(tbox), rbox or RBox(), frozenset(abox)).validate()


def check_simple(concepts, rb: RBox) -> None:
    for c in concepts:
        for d in subconcepts(c):
            if isinstance(d, (AtLeast, AtMost)) and isinstance(d.role, RoleConj):
                for r in d.role.roles:
                    if not rb.is_simple(r):
                        raise SemanticError(
                            f"non-simple role {r} in number restriction {d}")


def nnf_kb(kb: KB) -> KB:
    tbox = frozenset(GCI(nnf(g.sub), nnf(g.sup)) for g in kb.tbox)
    abox = frozenset(
        ConceptAssertion(ax.ind, nnf(ax.concept)) if isinstance(ax, ConceptAssertion) else ax
        for ax in kb.abox)
    return KB(tbox, kb.rbox, abox)


def rename_individuals(kb: KB, rep: dict) -> KB:
    """Substitute individual names according to rep (missing names kept)."""
    def m(a):
        return rep.get(a, a)

    out = set()
    for ax in kb.abox:
        if isinstance(ax, ConceptAssertion):
            out.add(ConceptAssertion(m(ax.ind), ax.concept))
        elif isinstance(ax, RoleAssertion):
            out.add(RoleAssertion(ax.role, m(ax.a), m(ax.b)))
        elif isinstance(ax, NegRoleAssertion):
            out.add(NegRoleAssertion(ax.role, m(ax.a), m(ax.b)))
        else:
            out.add(Inequality(m(ax.a), m(ax.b)))
    return KB(kb.tbox, kb.rbox, frozenset(out))
