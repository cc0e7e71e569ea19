"""Query entailment and answering on top of rewriting and consistency checks.

A query is entailed when no model of the KB avoids every match.  Tree-shaped
rewritings are excluded by TBox axioms, and every ground rewriting needs at
least one of its atoms negated ("spoiled") in the ABox.  If no such extended
KB is consistent the query is entailed.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations, product
from pathlib import Path

from more_itertools import set_partitions

from .dl import TOP, RBox, negate
from .errors import ResourceLimit
from .kb import (
    GCI, KB, ConceptAssertion, Inequality, NegRoleAssertion, SemanticError,
    rename_individuals,
)
from .query import (
    AnswerQuery, ConceptAtom, Ind, Query, RoleAtom, UCQ, is_connected,
    rename_apart, ucq_to_cnf,
)
from .rewrite import DEFAULT_BUDGET
from .rollup import groundings_of, rewritings, trees_of
from .subsume import Subsumer, prune_groundings, prune_trees
from .tableau import Limits, check
from .translate import ExtendedKB, tr_kb


@dataclass(frozen=True)
class Options:
    """Budgets and switches for one entailment run."""

    budget: int = DEFAULT_BUDGET        # rewriting candidates / ground queries
    max_partitions: int = 10_000
    max_extended: int = 10**6           # choice functions when enumerated
    tableau: Limits = field(default_factory=Limits)
    prune: bool = True
    jobs: int = 1
    trace_dir: str | None = None        # write one rule log per tableau run


@dataclass(frozen=True)
class ABPartition:
    blocks: tuple                       # tuple of sorted name tuples
    rep: dict                           # name -> representative
    kb: KB
    query: UCQ


def as_ucq(u) -> UCQ:
    if isinstance(u, Query):
        return UCQ((u,))
    if isinstance(u, AnswerQuery):
        return UCQ((u.query,))
    return u


def extended_tbox(trees) -> set:
    return {GCI(TOP, negate(t.concept)) for t in trees}


def spoiler(atom):
    """The negation of a ground atom as an assertion."""
    if isinstance(atom, ConceptAtom):
        return ConceptAssertion(atom.term.name, negate(atom.concept))
    if isinstance(atom, RoleAtom):
        return NegRoleAssertion(atom.role, atom.t1.name, atom.t2.name)
    raise TypeError(f"cannot spoil {atom}")


@lru_cache(maxsize=256)
def _candidates(q: Query, rb: RBox, budget: int) -> tuple:
    # only the groundings depend on the individuals, so this is shared
    # between ABox partitions
    return tuple(rewritings(q, KB(rbox=rb), budget))


def rewrite_parts(kb: KB, u, options: Options | None = None) -> tuple:
    """Tree queries and ground queries of all disjuncts."""
    opt = options or Options()
    trees: dict = {}
    ground: dict = {}
    for q in as_ucq(u).disjuncts:
        if not is_connected(q):
            raise ValueError(f"disjunct is not connected: {q}")
        cands = list(_candidates(q, kb.rbox, opt.budget))
        for t in trees_of(q, kb, opt.budget, cands):
            trees.setdefault(str(t.concept), t)
        for g in groundings_of(q, kb, opt.budget, cands):
            ground.setdefault(str(g), g)
    T = [trees[k] for k in sorted(trees)]
    G = [ground[k] for k in sorted(ground)]
    if opt.prune:
        sub = Subsumer(kb.rbox)
        T = prune_trees(T, kb.rbox, sub)
        G = prune_groundings(G, T, kb.rbox, sub)
    return T, G


def extended_kbs(kb: KB, u, options: Options | None = None):
    """All extended KBs, one spoiled atom per ground query, in canonical order."""
    opt = options or Options(prune=False)
    T, G = rewrite_parts(kb, u, opt)
    count = 1
    for g in G:
        count *= len(g.atoms)
    if count > opt.max_extended:
        raise ResourceLimit(f"{count} extended knowledge bases exceed the budget")
    tbox = frozenset(extended_tbox(T))
    choices = [sorted(g.atoms) for g in G]
    for pick in product(*choices):
        yield ExtendedKB(kb, tbox, frozenset(spoiler(a) for a in pick))


def _with_una(kb: KB) -> KB:
    neq = {Inequality(a, b) for a, b in combinations(kb.individuals, 2)}
    return KB(kb.tbox, kb.rbox, kb.abox | neq)


def _check_inds(kb: KB, u: UCQ) -> None:
    names = set(kb.individuals)
    for q in u.disjuncts:
        for t in q.inds:
            if t.name not in names:
                raise SemanticError(f"query individual {t.name} does not occur in the ABox")


def _consistent(alc, opt: Options) -> bool:
    res = check(alc, opt.tableau, trace=opt.trace_dir is not None)
    if opt.trace_dir is not None:
        text = str(alc)
        name = hashlib.sha1(text.encode()).hexdigest()[:16]
        path = Path(opt.trace_dir)
        path.mkdir(parents=True, exist_ok=True)
        verdict = "consistent" if res.consistent else "inconsistent"
        (path / f"{name}.log").write_text(
            text + "\n" + "\n".join(res.trace) + f"\nresult {verdict}\n")
    return res.consistent


def consistent(kb: KB, options: Options | None = None) -> bool:
    return _consistent(tr_kb(kb), options or Options())


def _entails_connected(kb: KB, u: UCQ, opt: Options) -> bool:
    T, G = rewrite_parts(kb, u, opt)
    clauses = tuple(tuple((spoiler(a),) for a in sorted(g.atoms)) for g in G)
    ekb = ExtendedKB(kb, frozenset(extended_tbox(T)), frozenset(), clauses)
    return not _consistent(tr_kb(ekb), opt)


def entails_una(kb: KB, u, options: Options | None = None) -> bool:
    """Entailment under the unique name assumption."""
    opt = options or Options()
    u = rename_apart(as_ucq(u))
    _check_inds(kb, u)
    kb = _with_una(kb)
    return all(_entails_connected(kb, part, opt) for part in ucq_to_cnf(u))


def ab_partitions(kb: KB, u, options: Options | None = None):
    """Set partitions of the ABox individuals, coarsest first."""
    opt = options or Options()
    u = as_ucq(u)
    inds = list(kb.individuals)
    parts = [sorted(tuple(sorted(b)) for b in p) for p in set_partitions(inds)] if inds else [[]]
    if len(parts) > opt.max_partitions:
        raise ResourceLimit(f"{len(parts)} ABox partitions exceed the budget")
    parts.sort(key=lambda p: (len(p), p))
    for blocks in parts:
        rep = {a: b[0] for b in blocks for a in b}
        m = {Ind(a): Ind(r) for a, r in rep.items() if a != r}
        q = UCQ(tuple(d.subst(m) if m else d for d in u.disjuncts))
        yield ABPartition(tuple(blocks), rep, rename_individuals(kb, rep), q)


def _partition_job(args) -> bool:
    kb, u, opt = args
    return entails_una(kb, u, opt)


def entails(kb: KB, u, una: bool = False, options: Options | None = None) -> bool:
    opt = options or Options()
    u = as_ucq(u)
    _check_inds(kb, u)
    if una:
        return entails_una(kb, u, opt)
    parts = list(ab_partitions(kb, u, opt))
    if opt.jobs > 1 and len(parts) > 1:
        serial = replace(opt, jobs=1)
        with ProcessPoolExecutor(opt.jobs) as ex:
            results = ex.map(_partition_job, [(p.kb, p.query, serial) for p in parts])
            return all(results)
    return all(entails_una(p.kb, p.query, opt) for p in parts)


def answer(kb: KB, aq, una: bool = False, options: Options | None = None) -> list:
    """Certain answers: tuples of individuals, sorted."""
    if isinstance(aq, Query):
        aq = AnswerQuery(aq, ())
    out = []
    inds = kb.individuals
    for tup in product(inds, repeat=len(aq.answer_vars)):
        m = dict(zip(aq.answer_vars, (Ind(a) for a in tup)))
        q = aq.query.subst(m) if m else aq.query
        if entails(kb, q, una, options):
            out.append(tup)
    return sorted(out)

