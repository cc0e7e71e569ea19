"""Ground truth for testing: finite interpretations, bounded model search,
query matches and unravelling into forest-shaped interpretations.

Nothing here calls the rewriting or tableau code, so it can be used to check
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product

from pysat.formula import IDPool
from pysat.solvers import Solver

from .dl import (
    And, AtLeast, AtMost, Atomic, Bottom, Concept, Exists, Forall, Not, Or,
    RBox, Role, RoleConj, Top, concept_names, concept_roles, role_dnf,
)
from .kb import ConceptAssertion, Inequality, NegRoleAssertion, RoleAssertion
from .query import UCQ, ConceptAtom, EqAtom, Ind, Query, RoleAtom, Var

MAX_DOMAIN = 6


@dataclass
class FiniteInterpretation:
    domain: tuple
    concepts: dict = field(default_factory=dict)     # name -> frozenset
    roles: dict = field(default_factory=dict)        # name -> frozenset of pairs
    inds: dict = field(default_factory=dict)         # individual -> element

    def __post_init__(self):
        self._ext: dict = {}

    # -- roles

    def role_ext(self, r: Role) -> frozenset:
        pairs = self.roles.get(r.name, frozenset())
        if r.inverse:
            return frozenset((e, d) for d, e in pairs)
        return pairs

    def slot_ext(self, w) -> frozenset:
        """Extension of a role, role conjunction or boolean role expression."""
        if isinstance(w, Role):
            return self.role_ext(w)
        if isinstance(w, RoleConj):
            out = None
            for r in w.roles:
                e = self.role_ext(r)
                out = e if out is None else out & e
            return out
        out = set()
        for pos, neg in role_dnf(w):
            cand = None
            for r in pos:
                e = self.role_ext(r)
                cand = e if cand is None else cand & e
            if cand is None:
                cand = frozenset(product(self.domain, self.domain))
            for r in neg:
                cand = cand - self.role_ext(r)
            out |= cand
        return frozenset(out)

    @cached_property
    def _succ_cache(self) -> dict:
        return {}

    def successors(self, w, d) -> list:
        key = (str(w), d)
        hit = self._succ_cache.get(key)
        if hit is None:
            idx = self._succ_cache.get(("idx", str(w)))
            if idx is None:
                idx = {}
                for a, b in self.slot_ext(w):
                    idx.setdefault(a, []).append(b)
                self._succ_cache[("idx", str(w))] = idx
            hit = idx.get(d, [])
            self._succ_cache[key] = hit
        return hit

    # -- concepts

    def ext(self, c: Concept) -> frozenset:
        hit = self._ext.get(c)
        if hit is not None:
            return hit
        dom = frozenset(self.domain)
        if isinstance(c, Top):
            out = dom
        elif isinstance(c, Bottom):
            out = frozenset()
        elif isinstance(c, Atomic):
            out = frozenset(self.concepts.get(c.name, frozenset())) & dom
        elif isinstance(c, Not):
            out = dom - self.ext(c.operand)
        elif isinstance(c, And):
            out = dom
            for o in c.operands:
                out = out & self.ext(o)
        elif isinstance(c, Or):
            out = frozenset()
            for o in c.operands:
                out = out | self.ext(o)
        elif isinstance(c, (Exists, Forall, AtLeast, AtMost)):
            filler = self.ext(c.filler)
            counts = {d: 0 for d in self.domain}
            bad = set()
            for d, e in self.slot_ext(c.role):
                if e in filler:
                    counts[d] += 1
                else:
                    bad.add(d)
            if isinstance(c, Exists):
                out = frozenset(d for d, k in counts.items() if k >= 1)
            elif isinstance(c, Forall):
                out = dom - bad
            elif isinstance(c, AtLeast):
                out = frozenset(d for d, k in counts.items() if k >= c.n)
            else:
                out = frozenset(d for d, k in counts.items() if k <= c.n)
        else:
            raise TypeError(f"not a concept: {c!r}")
        self._ext[c] = out
        return out

    # -- axioms

    def satisfies_rbox(self, rb: RBox) -> bool:
        for r, s in rb.inclusions:
            if not self.role_ext(r) <= self.role_ext(s):
                return False
        for n in rb.transitive:
            pairs = self.roles.get(n, frozenset())
            succ: dict = {}
            for d, e in pairs:
                succ.setdefault(d, set()).add(e)
            for d, e in pairs:
                if not succ.get(e, set()) <= succ[d]:
                    return False
        return True

    def satisfies_assertion(self, ax) -> bool:
        if isinstance(ax, ConceptAssertion):
            return self.inds[ax.ind] in self.ext(ax.concept)
        if isinstance(ax, RoleAssertion):
            return (self.inds[ax.a], self.inds[ax.b]) in self.role_ext(ax.role)
        if isinstance(ax, NegRoleAssertion):
            return (self.inds[ax.a], self.inds[ax.b]) not in self.role_ext(ax.role)
        if isinstance(ax, Inequality):
            return self.inds[ax.a] != self.inds[ax.b]
        raise TypeError(f"not an assertion: {ax!r}")

    def satisfies_kb(self, kb, una: bool = False) -> bool:
        rb = getattr(kb, "rbox", None)
        if rb is not None and not self.satisfies_rbox(rb):
            return False
        for g in kb.tbox:
            if not self.ext(g.sub) <= self.ext(g.sup):
                return False
        if any(not self.satisfies_assertion(ax) for ax in kb.abox):
            return False
        for clause in getattr(kb, "clauses", ()):
            if not any(all(self.satisfies_assertion(ax) for ax in opt) for opt in clause):
                return False
        if una:
            names = sorted({a for ax in kb.abox for a in _ax_inds(ax)})
            if len({self.inds[a] for a in names}) != len(names):
                return False
        return True

    def satisfies(self, q) -> bool:
        if isinstance(q, UCQ):
            return any(self.satisfies(d) for d in q.disjuncts)
        return next(iter_matches(q, self), None) is not None

    def table(self) -> str:
        """Plain-text dump, one line per fact, sorted."""
        lines = [f"domain {' '.join(map(str, self.domain))}"]
        for a in sorted(self.inds):
            lines.append(f"ind {a} {self.inds[a]}")
        for n in sorted(self.concepts):
            for d in sorted(self.concepts[n], key=str):
                lines.append(f"concept {n} {d}")
        for n in sorted(self.roles):
            for d, e in sorted(self.roles[n], key=str):
                lines.append(f"role {n} {d} {e}")
        return "\n".join(lines)


def _ax_inds(ax) -> tuple:
    if isinstance(ax, ConceptAssertion):
        return (ax.ind,)
    return (ax.a, ax.b)


def close_roles(roles: dict, rb: RBox) -> dict:
    """Smallest extension of the role extensions satisfying rb."""
    rs = {n: set(p) for n, p in roles.items()}
    names = set(rs) | {r.name for r in rb.roles}
    for n in names:
        rs.setdefault(n, set())

    def ext(r):
        return rs[r.name] if not r.inverse else {(e, d) for d, e in rs[r.name]}

    changed = True
    while changed:
        changed = False
        for r, s in rb.inclusions:
            new = ext(r) - ext(s)
            if new:
                changed = True
                if s.inverse:
                    rs[s.name] |= {(e, d) for d, e in new}
                else:
                    rs[s.name] |= new
        for n in rb.transitive:
            p = rs[n]
            extra = {(d, f) for d, e in p for e2, f in p if e == e2} - p
            if extra:
                changed = True
                p |= extra
    return {n: frozenset(p) for n, p in rs.items()}


# ------------------------------------------------------------ matches

def iter_matches(q: Query, i: FiniteInterpretation):
    """Evaluations of the terms of q under which every atom holds."""
    terms = sorted(q.terms, key=lambda t: (isinstance(t, Var), t.name))
    fixed = {}
    for t in terms:
        if isinstance(t, Ind):
            if t.name not in i.inds:
                return
            fixed[t] = i.inds[t.name]
    order = [t for t in terms if isinstance(t, Var)]
    # visit variables connected to already placed terms first
    placed = set(fixed)
    ordered = []
    rest = list(order)
    while rest:
        best = next((v for v in rest if any(
            (a.t1 == v and a.t2 in placed) or (a.t2 == v and a.t1 in placed)
            for a in q.role_atoms)), rest[0])
        ordered.append(best)
        placed.add(best)
        rest.remove(best)
    atoms_at: dict = {}
    seen = set(fixed)
    for v in ordered:
        seen.add(v)
        atoms_at[v] = [a for a in q.atoms if v in a.terms() and set(a.terms()) <= seen]
    for a in q.atoms:
        if set(a.terms()) <= set(fixed) and not _holds(a, fixed, i):
            return

    def go(k, m):
        if k == len(ordered):
            yield dict(m)
            return
        v = ordered[k]
        cands = None
        for a in q.role_atoms:
            if a.t1 == v and a.t2 in m and a.t2 != v:
                c = set(i.successors(a.role.inv(), m[a.t2]))
            elif a.t2 == v and a.t1 in m and a.t1 != v:
                c = set(i.successors(a.role, m[a.t1]))
            else:
                continue
            cands = c if cands is None else cands & c
        pool = i.domain if cands is None else sorted(cands, key=str)
        for d in pool:
            m[v] = d
            if all(_holds(a, m, i) for a in atoms_at[v]):
                yield from go(k + 1, m)
            del m[v]

    yield from go(0, dict(fixed))


def _holds(a, m: dict, i: FiniteInterpretation) -> bool:
    if isinstance(a, ConceptAtom):
        return m[a.term] in i.ext(a.concept)
    if isinstance(a, RoleAtom):
        return (m[a.t1], m[a.t2]) in i.role_ext(a.role)
    if isinstance(a, EqAtom):
        return m[a.t1] == m[a.t2]
    raise TypeError(a)


def enumerate_matches(q: Query, i: FiniteInterpretation) -> list:
    return list(iter_matches(q, i))


# ------------------------------------------------------------ match shapes

def _reach(q: Query, t, roots: set) -> set:
    """Terms reachable from t by role atoms without passing another root."""
    same = {u for u in q.terms if u == t or _eq(q, u, t)}
    seen = set(same)
    frontier = list(same)
    while frontier:
        u = frontier.pop()
        for a in q.role_atoms:
            for x, y in ((a.t1, a.t2), (a.t2, a.t1)):
                if x == u and y not in seen and (y not in roots or _eq(q, y, t)):
                    seen.add(y)
                    frontier.append(y)
    return seen


def _eq(q: Query, u, t) -> bool:
    return u in q.cls[t]


def classify_match(pi: dict, q: Query, i: FiniteInterpretation) -> str:
    """none, split, forest or tree for a match into a forest-shaped model
    whose elements are (individual, word) pairs."""
    for a in q.role_atoms:
        (x, w), (y, w2) = pi[a.t1], pi[a.t2]
        if not ((w == () and w2 == ()) or x == y):
            return "none"
    roots = {t for t in q.terms if pi[t][1] == ()}
    for tr in sorted(roots, key=str):
        a = pi[tr][0]
        region = _reach(q, tr, roots)
        nodes = {pi[t] for t in q.terms if pi[t][0] == a}
        parent = {n: n for n in nodes}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        edges = set()
        for at in q.role_atoms:
            if at.t1 not in region or at.t2 not in region:
                continue
            if _eq(q, at.t1, tr) and _eq(q, at.t2, tr):
                continue
            e1, e2 = pi[at.t1], pi[at.t2]
            if e1 == e2:
                return "split"
            edges.add(frozenset((e1, e2)))
        for e in edges:
            u, v = tuple(e)
            ru, rv = find(u), find(v)
            if ru == rv:
                return "split"
            parent[ru] = rv
    trees = {pi[t][0] for t in q.terms}
    return "tree" if len(trees) == 1 else "forest"


# ------------------------------------------------------------ unravelling

def unravel(i: FiniteInterpretation, kb, depth: int = 4) -> FiniteInterpretation:
    """Forest-shaped interpretation built from paths through i, cut at depth."""
    names = list(kb.individuals)
    rb = kb.rbox
    role_names = sorted(set(i.roles) | {r.name for r in rb.roles})
    link: dict = {}
    for n in role_names:
        for d, e in i.roles.get(n, ()):
            link.setdefault(d, set()).add(e)
            link.setdefault(e, set()).add(d)
    ind_elems = {i.inds[a] for a in names}
    path_of = {}
    frontier = []
    for a in names:
        key = (a, ())
        path_of[key] = (i.inds[a],)
        frontier.append(key)
    while frontier:
        nxt = []
        for key in frontier:
            a, w = key
            if len(w) >= depth:
                continue
            p = path_of[key]
            k = 0
            for d in sorted(link.get(p[-1], ()), key=str):
                if d in ind_elems and not len(p) > 2:
                    continue
                child = (a, w + (k,))
                path_of[child] = p + (d,)
                nxt.append(child)
                k += 1
        frontier = nxt
    tail = {s: p[-1] for s, p in path_of.items()}
    domain = tuple(sorted(path_of, key=lambda s: (s[0], len(s[1]), s[1])))
    concepts = {n: frozenset(s for s in domain if tail[s] in ext)
                for n, ext in i.concepts.items()}
    base: dict = {}
    for n in role_names:
        ext = i.roles.get(n, frozenset())
        pairs = set()
        for a in names:
            for b in names:
                if (i.inds[a], i.inds[b]) in ext:
                    pairs.add(((a, ()), (b, ())))
        for s in domain:
            a, w = s
            if w:
                par = (a, w[:-1])
                if (tail[par], tail[s]) in ext:
                    pairs.add((par, s))
                if (tail[s], tail[par]) in ext:
                    pairs.add((s, par))
        base[n] = pairs
    roles = {}
    for n in role_names:
        pairs = set(base[n])
        for s in rb.subs(Role(n)):
            if rb.is_transitive(s):
                closed = _closure(base.get(s.name, set()))
                pairs |= {(e, d) for d, e in closed} if s.inverse else closed
        roles[n] = frozenset(pairs)
    inds = {a: (a, ()) for a in names}
    return FiniteInterpretation(domain, concepts, roles, inds)


def _closure(pairs: set) -> set:
    succ: dict = {}
    for d, e in pairs:
        succ.setdefault(d, set()).add(e)
    out = set()
    for d in list(succ):
        stack = list(succ[d])
        seen = set()
        while stack:
            e = stack.pop()
            if e in seen:
                continue
            seen.add(e)
            stack.extend(succ.get(e, ()))
        out |= {(d, e) for e in seen}
    return out


# ------------------------------------------------------------ model search

class _Encoding:
    def __init__(self, n: int):
        self.n = n
        self.pool = IDPool()
        self.clauses: list = []
        self.true = self.pool.id("true")
        self.clauses.append([self.true])
        self._v: dict = {}
        self._s: dict = {}

    def role(self, r: Role, d: int, e: int) -> int:
        if r.inverse:
            d, e = e, d
        return self.pool.id(("r", r.name, d, e))

    def slot(self, w, d: int, e: int) -> int:
        if isinstance(w, Role):
            return self.role(w, d, e)
        key = (str(w), d, e)
        hit = self._s.get(key)
        if hit is not None:
            return hit
        if isinstance(w, RoleConj) and len(w.roles) == 1:
            v = self.role(next(iter(w.roles)), d, e)
        else:
            disj = []
            for pos, neg in sorted(role_dnf(w), key=str):
                lits = [self.role(r, d, e) for r in sorted(pos)] + \
                       [-self.role(r, d, e) for r in sorted(neg)]
                disj.append(self._and(lits))
            v = self._or(disj)
        self._s[key] = v
        return v

    def _and(self, lits: list) -> int:
        if len(lits) == 1:
            return lits[0]
        v = self.pool.id(("and", tuple(lits)))
        for x in lits:
            self.clauses.append([-v, x])
        self.clauses.append([v] + [-x for x in lits])
        return v

    def _or(self, lits: list) -> int:
        if not lits:
            return -self.true
        if len(lits) == 1:
            return lits[0]
        v = self.pool.id(("or", tuple(lits)))
        for x in lits:
            self.clauses.append([v, -x])
        self.clauses.append([-v] + lits)
        return v

    def concept(self, c: Concept, d: int) -> int:
        key = (c, d)
        hit = self._v.get(key)
        if hit is not None:
            return hit
        if isinstance(c, Top):
            v = self.true
        elif isinstance(c, Bottom):
            v = -self.true
        elif isinstance(c, Atomic):
            v = self.pool.id(("c", c.name, d))
        elif isinstance(c, Not):
            v = -self.concept(c.operand, d)
        elif isinstance(c, And):
            v = self._and([self.concept(o, d) for o in sorted(c.operands)])
        elif isinstance(c, Or):
            v = self._or([self.concept(o, d) for o in sorted(c.operands)])
        elif isinstance(c, Exists):
            v = self._at_least(1, c.role, c.filler, d)
        elif isinstance(c, Forall):
            v = -self._at_least(1, c.role, Not(c.filler), d)
        elif isinstance(c, AtLeast):
            v = self._at_least(c.n, c.role, c.filler, d)
        elif isinstance(c, AtMost):
            v = -self._at_least(c.n + 1, c.role, c.filler, d)
        else:
            raise TypeError(f"not a concept: {c!r}")
        self._v[key] = v
        return v

    def _at_least(self, n: int, w, filler: Concept, d: int) -> int:
        if n <= 0:
            return self.true
        if n > self.n:
            return -self.true
        ms = [self._and([self.slot(w, d, e), self.concept(filler, e)]) for e in range(self.n)]
        v = self.pool.id(("ge", n, str(w), str(filler), d))
        # v -> at least n of ms; not v -> at most n-1 of ms
        for sub in combinations(ms, self.n - n + 1):
            self.clauses.append([-v] + list(sub))
        for sub in combinations(ms, n):
            self.clauses.append([v] + [-x for x in sub])
        return v


def _signature(kb, avoid) -> tuple:
    names, roles = set(), set()
    concepts = [g.sub for g in kb.tbox] + [g.sup for g in kb.tbox]
    concepts += [ax.concept for ax in kb.abox if isinstance(ax, ConceptAssertion)]
    for clause in getattr(kb, "clauses", ()):
        for opt in clause:
            concepts += [ax.concept for ax in opt if isinstance(ax, ConceptAssertion)]
            roles |= {ax.role.name for ax in opt if isinstance(ax, (RoleAssertion, NegRoleAssertion))}
    for ax in kb.abox:
        if isinstance(ax, (RoleAssertion, NegRoleAssertion)):
            roles.add(ax.role.name)
    rb = getattr(kb, "rbox", None)
    if rb is not None:
        roles |= {r.name for r in rb.roles} | set(rb.transitive)
    for q in (avoid.disjuncts if avoid is not None else ()):
        for a in q.atoms:
            if isinstance(a, ConceptAtom):
                concepts.append(a.concept)
            elif isinstance(a, RoleAtom):
                roles.add(a.role.name)
    for c in concepts:
        names |= concept_names(c)
        roles |= {r.name for r in concept_roles(c)}
    return sorted(names), sorted(roles)


def _individuals(kb) -> list:
    out = set()
    for ax in kb.abox:
        out.update(_ax_inds(ax))
    for clause in getattr(kb, "clauses", ()):
        for opt in clause:
            for ax in opt:
                out.update(_ax_inds(ax))
    return sorted(out)


def _search_size(kb, n: int, una: bool, avoid: UCQ | None) -> FiniteInterpretation | None:
    enc = _Encoding(n)
    inds = _individuals(kb)
    if una and len(inds) > n:
        return None
    cl = enc.clauses
    dom = range(n)
    if una:
        place = {a: (lambda d, k=k: enc.true if d == k else -enc.true) for k, a in enumerate(inds)}
    else:
        place = {a: (lambda d, a=a: enc.pool.id(("m", a, d))) for a in inds}
        for a in inds:
            cl.append([place[a](d) for d in dom])
            for d, e in combinations(dom, 2):
                cl.append([-place[a](d), -place[a](e)])
        if inds:
            cl.append([place[inds[0]](0)])

    def at(a, d):
        return place[a](d)

    rb = getattr(kb, "rbox", None)
    if rb is not None:
        for r, s in sorted(rb.inclusions):
            for d in dom:
                for e in dom:
                    cl.append([-enc.role(r, d, e), enc.role(s, d, e)])
        for t in sorted(rb.transitive):
            r = Role(t)
            for d in dom:
                for e in dom:
                    for f in dom:
                        cl.append([-enc.role(r, d, e), -enc.role(r, e, f), enc.role(r, d, f)])
    for g in sorted(kb.tbox, key=str):
        for d in dom:
            cl.append([-enc.concept(g.sub, d), enc.concept(g.sup, d)])

    def assertion(ax, extra=()):
        """Clauses making ax true (or, with extra literals, weakened)."""
        out = []
        if isinstance(ax, ConceptAssertion):
            for d in dom:
                out.append([-at(ax.ind, d), enc.concept(ax.concept, d)])
        elif isinstance(ax, (RoleAssertion, NegRoleAssertion)):
            sign = 1 if isinstance(ax, RoleAssertion) else -1
            for d in dom:
                for e in dom:
                    out.append([-at(ax.a, d), -at(ax.b, e), sign * enc.role(ax.role, d, e)])
        elif isinstance(ax, Inequality):
            for d in dom:
                out.append([-at(ax.a, d), -at(ax.b, d)])
        return [c + list(extra) for c in out]

    for ax in sorted(kb.abox, key=str):
        cl.extend(assertion(ax))
    for k, clause in enumerate(getattr(kb, "clauses", ())):
        sel = [enc.pool.id(("opt", k, j)) for j in range(len(clause))]
        cl.append(sel)
        for s, opt in zip(sel, clause):
            for ax in opt:
                cl.extend(assertion(ax, [-s]))
    if avoid is not None:
        for q in avoid.disjuncts:
            _forbid(q, enc, n, una, at, cl)
    with Solver(name="g3", bootstrap_with=cl) as s:
        if not s.solve():
            return None
        model = set(x for x in s.get_model() if x > 0)
    names, roles = _signature(kb, avoid)
    concepts = {a: frozenset(d for d in dom if enc.pool.id(("c", a, d)) in model) for a in names}
    rext = {r: frozenset((d, e) for d in dom for e in dom if enc.pool.id(("r", r, d, e)) in model)
            for r in roles}
    placement = {}
    for a in inds:
        placement[a] = next(d for d in dom if (at(a, d) in model or at(a, d) == enc.true))
    return FiniteInterpretation(tuple(dom), concepts, rext, placement)


def _forbid(q: Query, enc: _Encoding, n: int, una: bool, at, cl: list) -> None:
    terms = sorted(q.terms, key=lambda t: (isinstance(t, Var), t.name))
    for image in product(range(n), repeat=len(terms)):
        m = dict(zip(terms, image))
        clause = []
        ok = True
        for t in terms:
            if isinstance(t, Ind):
                lit = at(t.name, m[t])
                if lit == -enc.true:
                    ok = False
                    break
                if lit != enc.true:
                    clause.append(-lit)
        if not ok:
            continue
        for a in sorted(q.atoms):
            if isinstance(a, EqAtom):
                if m[a.t1] != m[a.t2]:
                    ok = False
                    break
            elif isinstance(a, ConceptAtom):
                clause.append(-enc.concept(a.concept, m[a.term]))
            else:
                clause.append(-enc.role(a.role, m[a.t1], m[a.t2]))
        if ok:
            cl.append(clause)


def bounded_model_search(kb, max_domain: int, una: bool = False, avoid=None,
                         min_domain: int = 1) -> FiniteInterpretation | None:
    """A model of kb with at most max_domain elements (optionally one that
    does not satisfy the query avoid), smallest first; None if there is none."""
    if max_domain > MAX_DOMAIN:
        raise ValueError(f"domain bound above {MAX_DOMAIN}")
    if isinstance(avoid, Query):
        avoid = UCQ((avoid,))
    for n in range(max(1, min_domain), max_domain + 1):
        model = _search_size(kb, n, una, avoid)
        if model is not None:
            if not model.satisfies_kb(kb, una):
                raise RuntimeError("decoded interpretation is not a model")
            if avoid is not None and model.satisfies(avoid):
                raise RuntimeError("decoded interpretation satisfies the query")
            return model
    return None


def countermodel(kb, u, max_domain: int, una: bool = False) -> FiniteInterpretation | None:
    """A small model of kb in which the query u has no match."""
    return bounded_model_search(kb, max_domain, una, avoid=u)
