"""Translation of SHIQ with role conjunctions into ALCQIb.

Transitive roles disappear: universal restrictions become fresh concept names
X that are defined by a universal restriction over the up-closed role and
that propagate themselves along transitive sub-roles.  Role conjunctions are
replaced by boolean role expressions over all super-roles.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .dl import (
    And, AtLeast, AtMost, Atomic, Bottom, Concept, Exists, Forall, Not, Or,
    RBox, RoleConj, RoleExpr, Top, conj, disj, negate, nnf, role_and, closure, tc_set,
)
from .kb import (
    GCI, KB, ConceptAssertion, NegRoleAssertion, RoleAssertion,
)

X_PREFIX = "X_"
P_PREFIX = "P_"


@dataclass(frozen=True)
class ExtendedKB:
    """A KB plus axioms excluding tree matches and spoilers for ground matches.

    `extra_abox` holds one chosen spoiler per ground query.  `clauses` is the
    alternative form used by the entailment engine: one tuple of options per
    ground query, each option a tuple of assertions, to be chosen by the
    reasoner instead of enumerated up front.
    """

    base: KB
    extra_tbox: frozenset = field(default_factory=frozenset)
    extra_abox: frozenset = field(default_factory=frozenset)
    clauses: tuple = ()


@dataclass(frozen=True)
class AlcqibKB:
    tbox: frozenset
    abox: frozenset
    clauses: tuple = ()
    # translation-introduced names whose two defining inclusions may be
    # unfolded lazily in both directions
    lazy: frozenset = field(default_factory=frozenset)

    def __str__(self) -> str:
        tb = "".join(" " + s for s in sorted(map(str, self.tbox)))
        ab = "".join(" " + s for s in sorted(map(str, self.abox)))
        cl = "".join(
            " (either" + "".join(" (all-of" + "".join(" " + str(a) for a in opt) + ")"
                                 for opt in clause) + ")"
            for clause in self.clauses)
        return f"(kb (tbox{tb}) (rbox) (abox{ab}{cl}))"


class Translator:
    """Holds the fresh-name table so names stay stable within one run."""

    def __init__(self, rb: RBox):
        self.rb = rb
        self.names: dict = {}
        self.defs: dict = {}

    def up(self, w: RoleConj) -> RoleExpr:
        supers = set()
        for r in w.roles:
            supers |= self.rb.supers(r)
        return role_and(sorted(supers))

    def fresh(self, w: RoleConj, d: Concept) -> Atomic:
        key = (w, d)
        name = self.names.get(key)
        if name is None:
            digest = hashlib.sha1(f"{w} {d}".encode()).hexdigest()[:12]
            name = X_PREFIX + digest
            if name in self.defs:
                raise RuntimeError(f"fresh name collision for {w} {d}")
            self.names[key] = name
            self.defs[name] = key
        return Atomic(name)

    def concept(self, c: Concept) -> Concept:
        if isinstance(c, (Top, Bottom, Atomic)):
            return c
        if isinstance(c, Not):
            return Not(self.concept(c.operand))
        if isinstance(c, And):
            return conj(*(self.concept(o) for o in c.operands))
        if isinstance(c, Or):
            return disj(*(self.concept(o) for o in c.operands))
        if isinstance(c, Forall):
            return self.fresh(c.role, c.filler)
        if isinstance(c, Exists):
            return Not(self.fresh(c.role, negate(c.filler)))
        if isinstance(c, AtLeast):
            return AtLeast(c.n, self.up(c.role), self.concept(c.filler))
        if isinstance(c, AtMost):
            return AtMost(c.n, self.up(c.role), self.concept(c.filler))
        raise TypeError(f"not a concept: {c!r}")

    def aux_tbox(self, c: Concept) -> set:
        out = set()
        for d in closure(c, self.rb):
            if not isinstance(d, Forall):
                continue
            x = self.fresh(d.role, d.filler)
            body = Forall(self.up(d.role), self.concept(d.filler))
            out.add(GCI(x, body))
            out.add(GCI(body, x))
            for t in tc_set(d.role, self.rb):
                out.add(GCI(x, Forall(self.up(t), self.fresh(t, d.filler))))
        return out


def up_close(w: RoleConj, rb: RBox) -> RoleExpr:
    return Translator(rb).up(w)


def tr_concept(c: Concept, rb: RBox, tr: Translator | None = None) -> tuple:
    tr = tr or Translator(rb)
    return tr.concept(c), tr.names


def aux_tbox(c: Concept, rb: RBox, tr: Translator | None = None) -> set:
    return (tr or Translator(rb)).aux_tbox(c)


def _tr_assertion(ax, tr: Translator) -> tuple:
    rb = tr.rb
    if isinstance(ax, ConceptAssertion):
        c = nnf(ax.concept)
        return (ConceptAssertion(ax.ind, tr.concept(c)),), [c]
    if isinstance(ax, RoleAssertion):
        return tuple(RoleAssertion(s, ax.a, ax.b) for s in sorted(rb.supers(ax.role))), []
    if isinstance(ax, NegRoleAssertion):
        out = [NegRoleAssertion(s, ax.a, ax.b) for s in sorted(rb.subs(ax.role))]
        # Without transitivity the literals above miss s-paths through other
        # elements.  Mark every s-predecessor of b and forbid the mark at a;
        # the universal restriction is propagated along s like any other.
        cs = []
        for s in rb.transitive_subroles(ax.role):
            digest = hashlib.sha1(f"{s} {ax.a} {ax.b}".encode()).hexdigest()[:12]
            mark = Atomic(P_PREFIX + digest)
            back = Forall(RoleConj(frozenset([s.inv()])), mark)
            out.append(ConceptAssertion(ax.b, tr.concept(back)))
            out.append(ConceptAssertion(ax.a, Not(mark)))
            cs.append(back)
        return tuple(out), cs
    return (ax,), []


def tr_kb(ekb: ExtendedKB | KB, tr: Translator | None = None) -> AlcqibKB:
    if isinstance(ekb, KB):
        ekb = ExtendedKB(ekb)
    kb = ekb.base
    tr = tr or Translator(kb.rbox)
    sources = []
    tbox = set()
    for g in set(kb.tbox) | set(ekb.extra_tbox):
        sub, sup = nnf(g.sub), nnf(g.sup)
        sources += [sub, sup]
        tbox.add(GCI(tr.concept(sub), tr.concept(sup)))
    abox = set()
    for ax in set(kb.abox) | set(ekb.extra_abox):
        out, cs = _tr_assertion(ax, tr)
        abox.update(out)
        sources += cs
    clauses = []
    for clause in ekb.clauses:
        opts = []
        for opt in clause:
            lits = []
            for ax in opt:
                out, cs = _tr_assertion(ax, tr)
                lits.extend(out)
                sources += cs
            opts.append(tuple(lits))
        clauses.append(tuple(opts))
    for c in sources:
        tbox |= tr.aux_tbox(c)
    return AlcqibKB(frozenset(tbox), frozenset(abox), tuple(clauses),
                    frozenset(tr.defs))
