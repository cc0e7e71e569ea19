"""Consistency of ALCQIb knowledge bases by a completion-graph tableau.

Nodes carry concept labels, edges carry role literals.  ABox individuals are
root nodes and may be related arbitrarily; all other nodes form trees below
them.  Pairwise blocking stops the trees from growing forever.

Every fact is stored with a dependency set (an int used as a bit set of the
branch points it relies on).  When all alternatives of a branch point fail
with clashes that do not involve that branch point, the search jumps straight
back past it.
"""

from __future__ import annotations

import sys
import threading
import time
from dataclasses import dataclass, field
from itertools import combinations

from .dl import (
    And, AtLeast, AtMost, Atomic, Bottom, Concept, Exists, Forall, Not, Or, Role,
    Top, negate, nnf, role_dnf,
)
from .errors import ResourceLimit
from .kb import ConceptAssertion, Inequality, NegRoleAssertion, RoleAssertion

TOP_K, BOT_K, ATOM_K, NATOM_K, AND_K, OR_K, ALL_K, MORE_K, LESS_K = range(9)


@dataclass
class Limits:
    max_nodes: int = 200_000
    max_branches: int = 2_000_000
    seconds: float | None = None


_RULE_NAMES = {AND_K: "and", ATOM_K: "unfold", NATOM_K: "unfold", ALL_K: "all",
               LESS_K: "at-most", OR_K: "or-unit"}


class _Clash(Exception):
    def __init__(self, dep: int):
        self.dep = dep


# ------------------------------------------------------------ interning

class Table:
    """Integer ids for concepts, roles and role expressions."""

    def __init__(self):
        self.cid: dict = {}
        self.concepts: list = []
        self.kind: list = []
        self.args: list = []     # AND/OR: child ids; quantifiers: filler id
        self.num: list = []
        self.rexp: list = []     # role expression id for quantifiers
        self._neg: list = []
        self.rid: dict = {}
        self.roles: list = []
        self.inv: list = []
        self.xid: dict = {}
        self.dnf: list = []      # per expression: tuple of (pos ids, neg ids)

    def role(self, r: Role) -> int:
        i = self.rid.get(r)
        if i is None:
            i = len(self.roles)
            self.rid[r] = i
            self.roles.append(r)
            self.inv.append(None)
            j = self.role(r.inv())
            self.inv[i] = j
            self.inv[j] = i
        return i

    def expr(self, w) -> int:
        key = str(w)
        i = self.xid.get(key)
        if i is None:
            i = len(self.dnf)
            self.xid[key] = i
            self.dnf.append(tuple(
                (frozenset(self.role(r) for r in pos), frozenset(self.role(r) for r in neg))
                for pos, neg in sorted(role_dnf(w), key=lambda d: (sorted(map(str, d[0])), sorted(map(str, d[1]))))))
        return i

    def concept(self, c: Concept) -> int:
        i = self.cid.get(c)
        if i is not None:
            return i
        if isinstance(c, Top):
            k, a, n, x = TOP_K, None, 0, None
        elif isinstance(c, Bottom):
            k, a, n, x = BOT_K, None, 0, None
        elif isinstance(c, Atomic):
            k, a, n, x = ATOM_K, None, 0, None
        elif isinstance(c, Not):
            if not isinstance(c.operand, Atomic):
                return self.concept(nnf(c))
            k, a, n, x = NATOM_K, None, 0, None
        elif isinstance(c, And):
            k, a, n, x = AND_K, tuple(self.concept(o) for o in sorted(c.operands)), 0, None
        elif isinstance(c, Or):
            k, a, n, x = OR_K, tuple(self.concept(o) for o in sorted(c.operands)), 0, None
        elif isinstance(c, Forall):
            k, a, n, x = ALL_K, self.concept(c.filler), 0, self.expr(c.role)
        elif isinstance(c, Exists):
            k, a, n, x = MORE_K, self.concept(c.filler), 1, self.expr(c.role)
        elif isinstance(c, AtLeast):
            k, a, n, x = MORE_K, self.concept(c.filler), c.n, self.expr(c.role)
        elif isinstance(c, AtMost):
            k, a, n, x = LESS_K, self.concept(c.filler), c.n, self.expr(c.role)
        else:
            raise TypeError(f"not a concept: {c!r}")
        i = self.cid.get(c)
        if i is not None:
            return i
        i = len(self.concepts)
        self.cid[c] = i
        self.concepts.append(c)
        self.kind.append(k)
        self.args.append(a)
        self.num.append(n)
        self.rexp.append(x)
        self._neg.append(None)
        return i

    def neg(self, i: int) -> int:
        j = self._neg[i]
        if j is None:
            j = self.concept(negate(self.concepts[i]))
            self._neg[i] = j
            self._neg[j] = i
        return j


# ------------------------------------------------------------ graph

class Node:
    __slots__ = ("id", "gen", "label", "ors", "alls", "mores", "lesses", "edges",
                 "negs", "neq", "parent", "children", "root", "alive", "depth")

    def clone(self, gen: int) -> "Node":
        n = Node()
        n.id = self.id
        n.gen = gen
        n.label = dict(self.label)
        n.ors = list(self.ors)
        n.alls = list(self.alls)
        n.mores = list(self.mores)
        n.lesses = list(self.lesses)
        n.edges = {k: dict(v) for k, v in self.edges.items()}
        n.negs = {k: dict(v) for k, v in self.negs.items()}
        n.neq = dict(self.neq)
        n.parent = self.parent
        n.children = list(self.children)
        n.root = self.root
        n.alive = self.alive
        n.depth = self.depth
        return n


class Graph:
    _gens = [0]

    def __init__(self):
        self.nodes: list = []
        self.inds: dict = {}
        self.gen = self._next_gen()
        self.queue: list = []

    @classmethod
    def _next_gen(cls) -> int:
        cls._gens[0] += 1
        return cls._gens[0]

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.nodes = list(self.nodes)
        g.inds = dict(self.inds)
        g.gen = self._next_gen()
        g.queue = []
        # the parent keeps using its nodes; make sure it clones before writing
        self.gen = self._next_gen()
        return g

    def own(self, i: int) -> Node:
        n = self.nodes[i]
        if n.gen != self.gen:
            n = n.clone(self.gen)
            self.nodes[i] = n
        return n

    def new_node(self, parent: int | None, root: bool) -> Node:
        n = Node()
        n.id = len(self.nodes)
        n.gen = self.gen
        n.label = {}
        n.ors, n.alls, n.mores, n.lesses = [], [], [], []
        n.edges, n.negs, n.neq = {}, {}, {}
        n.parent = parent
        n.children = []
        n.root = root
        n.alive = True
        n.depth = 0 if parent is None else self.nodes[parent].depth + 1
        self.nodes.append(n)
        if parent is not None:
            self.own(parent).children.append(n.id)
        return n


@dataclass
class Result:
    consistent: bool
    graph: Graph | None = None
    nodes: int = 0
    branches: int = 0
    trace: list = field(default_factory=list)
    engine: "Tableau | None" = None


# ------------------------------------------------------------ reasoner

class Tableau:
    def __init__(self, kb, limits: Limits | None = None, trace: bool = False):
        self.kb = kb
        self.limits = limits or Limits()
        self.t = Table()
        self.tracing = trace
        self.trace: list = []
        self.absorbed: dict = {}
        self.internal: list = []
        self.created = 0
        self.branch_count = 0
        self.next_bit = 0
        self.deadline = None
        self._prepare()

    # -- setup

    def _prepare(self) -> None:
        t = self.t
        lazy = getattr(self.kb, "lazy", frozenset())
        for g in sorted(self.kb.tbox, key=str):
            sub, sup = nnf(g.sub), nnf(g.sup)
            if isinstance(sup, Top) or sub == sup:
                continue
            if isinstance(sub, Atomic):
                self.absorbed.setdefault(t.concept(sub), []).append(t.concept(sup))
            elif isinstance(sup, Atomic) and sup.name in lazy and isinstance(sub, Forall):
                # only the defining axiom of X may be unfolded through not-X
                self.absorbed.setdefault(t.concept(Not(sup)), []).append(t.concept(negate(sub)))
            elif isinstance(sub, And) and any(isinstance(o, Atomic) for o in sub.operands):
                a = min(o for o in sub.operands if isinstance(o, Atomic))
                rest = [negate(o) for o in sub.operands if o != a]
                self.absorbed.setdefault(t.concept(a), []).append(
                    t.concept(nnf(Or(frozenset(rest + [sup])))))
            else:
                c = nnf(Or(frozenset([negate(sub), sup]))) if not isinstance(sub, Top) else sup
                self.internal.append(t.concept(c))
        self.internal = sorted(set(self.internal))
        for k in list(self.absorbed):
            self.absorbed[k] = sorted(set(self.absorbed[k]))

    def _bit(self) -> int:
        b = self.next_bit
        self.next_bit += 1
        self.branch_count += 1
        if self.branch_count > self.limits.max_branches:
            raise ResourceLimit(f"more than {self.limits.max_branches} branch points")
        return b

    def _log(self, msg: str) -> None:
        if self.tracing:
            self.trace.append(msg)

    # -- facts

    def add(self, g: Graph, x: int, c: int, dep: int) -> None:
        node = g.nodes[x]
        if c in node.label or not node.alive:
            return
        node = g.own(x)
        node.label[c] = dep
        t = self.t
        k = t.kind[c]
        if k == BOT_K:
            raise _Clash(dep)
        if k != TOP_K:
            n = t.neg(c)
            if n in node.label:
                raise _Clash(dep | node.label[n])
        if k == OR_K:
            node.ors.append(c)
        elif k == ALL_K:
            node.alls.append(c)
        elif k == MORE_K:
            node.mores.append(c)
        elif k == LESS_K:
            node.lesses.append(c)
        g.queue.append((x, c))

    def add_edge(self, g: Graph, x: int, y: int, r: int, dep: int) -> None:
        nx = g.nodes[x]
        have = nx.edges.get(y)
        if have is not None and r in have:
            return
        ri = self.t.inv[r]
        nx = g.own(x)
        nx.edges.setdefault(y, {})[r] = dep
        ny = g.own(y)
        ny.edges.setdefault(x, {})[ri] = dep
        bad = nx.negs.get(y, {}).get(r)
        if bad is not None:
            raise _Clash(dep | bad)
        g.queue.append((x, -1 - y))

    def add_neg_edge(self, g: Graph, x: int, y: int, r: int, dep: int) -> None:
        nx = g.nodes[x]
        if r in nx.negs.get(y, {}):
            return
        ri = self.t.inv[r]
        nx = g.own(x)
        nx.negs.setdefault(y, {})[r] = dep
        g.own(y).negs.setdefault(x, {})[ri] = dep
        bad = nx.edges.get(y, {}).get(r)
        if bad is not None:
            raise _Clash(dep | bad)
        g.queue.append((x, -1 - y))

    def add_neq(self, g: Graph, x: int, y: int, dep: int) -> None:
        if x == y:
            raise _Clash(dep)
        if y in g.nodes[x].neq:
            return
        g.own(x).neq[y] = dep
        g.own(y).neq[x] = dep

    def fresh_node(self, g: Graph, parent: int | None) -> int:
        self.created += 1
        if self.created > self.limits.max_nodes:
            raise ResourceLimit(f"more than {self.limits.max_nodes} tableau nodes")
        n = g.new_node(parent, parent is None)
        for c in self.internal:
            self.add(g, n.id, c, 0)
        return n.id

    # -- role expressions

    def holds(self, g: Graph, x: int, y: int, w: int):
        """Truth of role expression w on the edge x->y: (True|False|None, dep)."""
        nx = g.nodes[x]
        pos = nx.edges.get(y)
        if not pos:
            return False, 0
        negs = nx.negs.get(y, {})
        unknown = False
        for p, n in self.t.dnf[w]:
            dep = 0
            ok = True
            for r in p:
                d = pos.get(r)
                if d is None:
                    ok = False
                    break
                dep |= d
            if not ok:
                continue
            und = False
            for r in n:
                if r in pos:
                    ok = False
                    break
                d = negs.get(r)
                if d is None:
                    und = True
                else:
                    dep |= d
            if not ok:
                continue
            if und:
                unknown = True
                continue
            return True, dep
        return (None if unknown else False), 0

    def neighbours(self, g: Graph, x: int, w: int) -> list:
        out = []
        for y in g.nodes[x].edges:
            v, d = self.holds(g, x, y, w)
            if v:
                out.append((y, d))
        return out

    # -- deterministic saturation

    def saturate(self, g: Graph) -> None:
        t = self.t
        q = g.queue
        while q:
            x, c = q.pop()
            node = g.nodes[x]
            if not node.alive:
                continue
            if c < 0:
                y = -1 - c
                if not g.nodes[y].alive:
                    continue
                for a in list(node.alls):
                    self._apply_all(g, x, a, [y])
                for a in list(g.nodes[y].alls):
                    self._apply_all(g, y, a, [x])
                for a in list(node.lesses):
                    self._check_atmost(g, x, a)
                for a in list(g.nodes[y].lesses):
                    self._check_atmost(g, y, a)
                continue
            dep = node.label.get(c)
            if dep is None:
                continue
            k = t.kind[c]
            if self.tracing and k in _RULE_NAMES:
                self.trace.append(f"{_RULE_NAMES[k]} {x} {t.concepts[c]}")
            if k == AND_K:
                for a in t.args[c]:
                    self.add(g, x, a, dep)
            elif k == ATOM_K or k == NATOM_K:
                for a in self.absorbed.get(c, ()):
                    self.add(g, x, a, dep)
            elif k == ALL_K:
                self._apply_all(g, x, c, list(node.edges))
            elif k == LESS_K:
                self._check_atmost(g, x, c)
            elif k == OR_K:
                self._unit_or(g, x, c)

    def _apply_all(self, g: Graph, x: int, c: int, targets) -> None:
        dep = g.nodes[x].label[c]
        t = self.t
        for y in targets:
            if not g.nodes[y].alive:
                continue
            v, d = self.holds(g, x, y, t.rexp[c])
            if v:
                self.add(g, y, t.args[c], dep | d)

    def _unit_or(self, g: Graph, x: int, c: int) -> None:
        node = g.nodes[x]
        t = self.t
        open_ = []
        dep = node.label[c]
        for a in t.args[c]:
            if a in node.label:
                return
            n = t.neg(a)
            if n in node.label:
                dep |= node.label[n]
            elif t.kind[a] != BOT_K:
                open_.append(a)
        if not open_:
            raise _Clash(dep)
        if len(open_) == 1:
            self.add(g, x, open_[0], dep)

    def _qualified(self, g: Graph, x: int, c: int) -> list:
        """W-neighbours carrying the filler of number restriction c."""
        t = self.t
        f = t.args[c]
        out = []
        for y, d in self.neighbours(g, x, t.rexp[c]):
            fd = g.nodes[y].label.get(f)
            if fd is not None:
                out.append((y, d | fd))
        return out

    def _distinct_set(self, g: Graph, cands: list, k: int):
        """k pairwise-unequal nodes among cands, with the dependency of that fact."""
        if k == 0:
            return (0,)
        if k == 1:
            return (0, cands[0][1]) if cands else None
        if len(cands) < k:
            return None
        for combo in combinations(cands, k):
            dep = 0
            ok = True
            for (a, _), (b, _) in combinations(combo, 2):
                d = g.nodes[a].neq.get(b)
                if d is None:
                    ok = False
                    break
                dep |= d
            if ok:
                return (dep,) + tuple(d for _, d in combo)
        return None

    def _check_atmost(self, g: Graph, x: int, c: int) -> None:
        n = self.t.num[c]
        cands = self._qualified(g, x, c)
        if len(cands) <= n:
            return
        found = self._distinct_set(g, cands, n + 1)
        if found is not None:
            dep = g.nodes[x].label[c]
            for d in found:
                dep |= d
            raise _Clash(dep)

    # -- blocking

    def blocking(self, g: Graph) -> dict:
        """Node id -> 0 (active), 1 (directly blocked) or 2 (indirectly blocked)."""
        status = {}
        sig = {}
        for n in sorted((n for n in g.nodes if n.alive), key=lambda n: (n.depth, n.id)):
            if n.root:
                status[n.id] = 0
                continue
            p = g.nodes[n.parent]
            if status.get(p.id, 0) != 0:
                status[n.id] = 2
                continue
            s = (frozenset(n.label), frozenset(p.label), frozenset(p.edges.get(n.id, {})))
            sig[n.id] = s
            status[n.id] = 0
            a = p
            while not a.root:
                if sig.get(a.id) == s:
                    status[n.id] = 1
                    break
                a = g.nodes[a.parent]
        return status

    def pairwise_blocked(self, g: Graph, x: int) -> bool:
        return self.blocking(g).get(x, 0) == 1

    # -- search

    def run(self) -> Result:
        if self.limits.seconds is not None:
            self.deadline = time.monotonic() + self.limits.seconds
        g = Graph()
        try:
            self._load(g)
            self.saturate(g)
        except _Clash:
            return Result(False, None, self.created, self.branch_count, self.trace)
        out = self._search(g)
        if out is None or isinstance(out, int):
            return Result(False, None, self.created, self.branch_count, self.trace)
        return Result(True, out, self.created, self.branch_count, self.trace, self)

    def _load(self, g: Graph) -> None:
        t = self.t
        names = set()
        for ax in self.kb.abox:
            names.update(_inds(ax))
        for clause in getattr(self.kb, "clauses", ()):
            for opt in clause:
                for ax in opt:
                    names.update(_inds(ax))
        for a in sorted(names):
            g.inds[a] = self.fresh_node(g, None)
        for ax in sorted(self.kb.abox, key=str):
            if isinstance(ax, ConceptAssertion):
                self.add(g, g.inds[ax.ind], t.concept(nnf(ax.concept)), 0)
            elif isinstance(ax, RoleAssertion):
                self.add_edge(g, g.inds[ax.a], g.inds[ax.b], t.role(ax.role), 0)
            elif isinstance(ax, NegRoleAssertion):
                self.add_neg_edge(g, g.inds[ax.a], g.inds[ax.b], t.role(ax.role), 0)
            elif isinstance(ax, Inequality):
                self.add_neq(g, g.inds[ax.a], g.inds[ax.b], 0)
        self.clauses = []
        for clause in getattr(self.kb, "clauses", ()):
            opts = []
            for opt in clause:
                lits = []
                for ax in opt:
                    if isinstance(ax, ConceptAssertion):
                        lits.append(("c", ax.ind, t.concept(nnf(ax.concept))))
                    elif isinstance(ax, NegRoleAssertion):
                        lits.append(("n", ax.a, ax.b, t.role(ax.role)))
                    elif isinstance(ax, RoleAssertion):
                        lits.append(("r", ax.a, ax.b, t.role(ax.role)))
                    else:
                        lits.append(("d", ax.a, ax.b))
                opts.append(tuple(lits))
            self.clauses.append(tuple(opts))

    def _tick(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimit("tableau time limit reached")

    def _search(self, g: Graph):
        """Returns a complete graph, or the dependency set of a clash."""
        while True:
            self._tick()
            try:
                self.saturate(g)
                step = self._choose(g)
            except _Clash as e:
                return e.dep
            if step is None:
                return g
            if step == "again":
                continue
            base, alts, why = step
            bit = self._bit()
            mask = 1 << bit
            acc = base
            for i, alt in enumerate(alts):
                h = g.copy() if i < len(alts) - 1 else g
                self._log(f"branch {bit} {why} alt {i}")
                try:
                    alt(h, mask | base)
                    res = self._search(h)
                except _Clash as e:
                    res = e.dep
                if not isinstance(res, int):
                    return res
                self._log(f"clash in branch {bit} alt {i}")
                if not res & mask:
                    return res
                acc |= res & ~mask
            return acc

    # -- nondeterministic and generating rules

    def _choose(self, g: Graph):
        """Apply one rule: returns None when complete, "again" after a
        deterministic step, or (dependency, alternatives, description)."""
        step = self._clause_rule(g)
        if step is not None:
            return step
        status = self.blocking(g)
        active = [n for n in g.nodes if n.alive and status.get(n.id, 0) != 2]
        for n in active:
            for c in n.ors:
                step = self._or_rule(g, n.id, c)
                if step is not None:
                    return step
        for n in active:
            for c in n.alls + n.lesses:
                step = self._role_choice(g, n.id, c)
                if step is not None:
                    return step
            for c in n.lesses:
                step = self._choose_rule(g, n.id, c)
                if step is not None:
                    return step
        for n in active:
            for c in n.lesses:
                step = self._merge_rule(g, n.id, c)
                if step is not None:
                    return step
        for n in active:
            if status.get(n.id, 0) != 0:
                continue
            for c in n.mores:
                step = self._more_rule(g, n.id, c)
                if step is not None:
                    return step
        return None

    def _lit(self, g: Graph, lit):
        """(True|False|None, dep) for a clause literal."""
        kind = lit[0]
        if kind == "c":
            node = g.nodes[g.inds[lit[1]]]
            c = lit[2]
            if self.t.kind[c] == BOT_K:
                return False, 0
            if c in node.label:
                return True, node.label[c]
            n = self.t.neg(c)
            if n in node.label:
                return False, node.label[n]
            return None, 0
        x, y = g.inds[lit[1]], g.inds[lit[2]]
        nx = g.nodes[x]
        if kind == "d":
            if x == y:
                return False, 0
            d = nx.neq.get(y)
            return (True, d) if d is not None else (None, 0)
        r = lit[3]
        pos = nx.edges.get(y, {}).get(r)
        neg = nx.negs.get(y, {}).get(r)
        if kind == "r":
            pos, neg = neg, pos
        if neg is not None:
            return True, neg
        if pos is not None:
            return False, pos
        return None, 0

    def _assert_lit(self, g: Graph, lit, dep: int) -> None:
        kind = lit[0]
        if kind == "c":
            self.add(g, g.inds[lit[1]], lit[2], dep)
        elif kind == "d":
            self.add_neq(g, g.inds[lit[1]], g.inds[lit[2]], dep)
        elif kind == "n":
            self.add_neg_edge(g, g.inds[lit[1]], g.inds[lit[2]], lit[3], dep)
        else:
            self.add_edge(g, g.inds[lit[1]], g.inds[lit[2]], lit[3], dep)

    def _clause_rule(self, g: Graph):
        for clause in self.clauses:
            false_dep = 0
            open_ = []
            done = False
            for opt in clause:
                state = True
                dep = 0
                for lit in opt:
                    v, d = self._lit(g, lit)
                    if v is False:
                        state = False
                        dep = d
                        break
                    if v is None:
                        state = None
                if state is True:
                    done = True
                    break
                if state is False:
                    false_dep |= dep
                else:
                    open_.append(opt)
            if done:
                continue
            if not open_:
                raise _Clash(false_dep)
            if len(open_) == 1:
                for lit in open_[0]:
                    self._assert_lit(g, lit, false_dep)
                return "again"

            def make(opt):
                def apply(h, dep):
                    for lit in opt:
                        self._assert_lit(h, lit, dep)
                return apply

            return false_dep, [make(o) for o in open_], "clause"
        return None

    def _or_rule(self, g: Graph, x: int, c: int):
        node = g.nodes[x]
        t = self.t
        dep = node.label[c]
        open_ = []
        for a in t.args[c]:
            if a in node.label:
                return None
            n = t.neg(a)
            if n in node.label:
                dep |= node.label[n]
            elif t.kind[a] != BOT_K:
                open_.append(a)
        if not open_:
            raise _Clash(dep)
        if len(open_) == 1:
            self.add(g, x, open_[0], dep)
            return "again"

        def make(a):
            return lambda h, d: self.add(h, x, a, d)

        # cheap guesses first: names before complex concepts
        open_.sort(key=lambda a: (t.kind[a] not in (ATOM_K, NATOM_K), a))
        return dep, [make(a) for a in open_], f"or {x}"

    def _role_choice(self, g: Graph, x: int, c: int):
        t = self.t
        w = t.rexp[c]
        if not any(n for _, n in t.dnf[w]):
            return None
        node = g.nodes[x]
        for y in node.edges:
            v, _ = self.holds(g, x, y, w)
            if v is not None:
                continue
            pos = node.edges[y]
            negs = node.negs.get(y, {})
            for p, n in t.dnf[w]:
                for r in sorted(n):
                    if r not in pos and r not in negs:
                        dep = node.label[c]
                        return dep, [lambda h, d, r=r, y=y: self.add_edge(h, x, y, r, d),
                                     lambda h, d, r=r, y=y: self.add_neg_edge(h, x, y, r, d)], \
                            f"role {x} {y}"
        return None

    def _choose_rule(self, g: Graph, x: int, c: int):
        t = self.t
        f = t.args[c]
        nf = t.neg(f)
        for y, d in self.neighbours(g, x, t.rexp[c]):
            lab = g.nodes[y].label
            if f in lab or nf in lab:
                continue
            dep = g.nodes[x].label[c] | d
            return dep, [lambda h, dd, y=y: self.add(h, y, f, dd),
                         lambda h, dd, y=y: self.add(h, y, nf, dd)], f"choose {x} {y}"
        return None

    def _merge_rule(self, g: Graph, x: int, c: int):
        n = self.t.num[c]
        cands = self._qualified(g, x, c)
        if len(cands) <= n:
            return None
        dep = g.nodes[x].label[c]
        for _, d in cands:
            dep |= d
        pairs = []
        for (a, _), (b, _) in combinations(cands, 2):
            if b in g.nodes[a].neq:
                continue
            src, dst = self._merge_direction(g, x, a, b)
            pairs.append((src, dst))
        if not pairs:
            # every pair is unequal: more than n pairwise-distinct neighbours
            self._check_atmost(g, x, c)
            raise _Clash(dep)

        def make(src, dst):
            return lambda h, d: self.merge(h, src, dst, d)

        return dep, [make(s, d) for s, d in pairs], f"merge {x}"

    def _merge_direction(self, g: Graph, x: int, a: int, b: int) -> tuple:
        na, nb = g.nodes[a], g.nodes[b]
        if na.root and nb.root:
            return (max(a, b), min(a, b))
        if na.root:
            return (b, a)
        if nb.root:
            return (a, b)
        if g.nodes[x].parent == a:
            return (b, a)
        if g.nodes[x].parent == b:
            return (a, b)
        return (max(a, b), min(a, b))

    def merge(self, g: Graph, y: int, z: int, dep: int) -> None:
        """Merge node y into node z."""
        self._log(f"merge {y} -> {z}")
        ny = g.own(y)
        for c, d in list(ny.label.items()):
            self.add(g, z, c, d | dep)
        for w, d in list(ny.neq.items()):
            self.add_neq(g, z, w, d | dep)
        if ny.root:
            for w, rs in list(ny.edges.items()):
                target = z if w == y else w
                for r, d in rs.items():
                    self.add_edge(g, z, target, r, d | dep)
            for w, rs in list(ny.negs.items()):
                target = z if w == y else w
                for r, d in rs.items():
                    self.add_neg_edge(g, z, target, r, d | dep)
            for ch in list(ny.children):
                if g.nodes[ch].alive:
                    nc = g.own(ch)
                    nc.parent = z
                    g.own(z).children.append(ch)
            for name, i in list(g.inds.items()):
                if i == y:
                    g.inds[name] = z
            self._detach(g, y)
        else:
            p = ny.parent
            for w, rs in list(ny.edges.items()):
                if w in (p,) or g.nodes[w].root:
                    for r, d in rs.items():
                        self.add_edge(g, z, w, r, d | dep)
            for w, rs in list(ny.negs.items()):
                if w == p or g.nodes[w].root:
                    for r, d in rs.items():
                        self.add_neg_edge(g, z, w, r, d | dep)
            self._prune(g, y)

    def _detach(self, g: Graph, y: int) -> None:
        ny = g.own(y)
        ny.alive = False
        for w in list(ny.edges) + list(ny.negs) + list(ny.neq):
            if w == y or not g.nodes[w].alive:
                continue
            nw = g.own(w)
            nw.edges.pop(y, None)
            nw.negs.pop(y, None)
            nw.neq.pop(y, None)
        if ny.parent is not None:
            p = g.own(ny.parent)
            if y in p.children:
                p.children.remove(y)
        ny.edges, ny.negs, ny.neq = {}, {}, {}
        ny.children = []

    def _prune(self, g: Graph, y: int) -> None:
        for ch in list(g.nodes[y].children):
            if g.nodes[ch].alive and g.nodes[ch].parent == y:
                self._prune(g, ch)
        self._detach(g, y)

    def _more_rule(self, g: Graph, x: int, c: int):
        t = self.t
        n = t.num[c]
        w = t.rexp[c]
        f = t.args[c]
        cands = self._qualified(g, x, c)
        if self._distinct_set(g, cands, n) is not None:
            return None
        dep = g.nodes[x].label[c]
        disjuncts = t.dnf[w]

        def make(pos, neg):
            def apply(h, d):
                fresh = []
                for _ in range(n):
                    y = self.fresh_node(h, x)
                    fresh.append(y)
                    for r in sorted(pos):
                        self.add_edge(h, x, y, r, d)
                    for r in sorted(neg):
                        self.add_neg_edge(h, x, y, r, d)
                    self.add(h, y, f, d)
                for a, b in combinations(fresh, 2):
                    self.add_neq(h, a, b, d)
                self._log(f"generate {x} -> {fresh}")
            return apply

        if len(disjuncts) == 1:
            make(*disjuncts[0])(g, dep)
            return "again"
        return dep, [make(p, q) for p, q in disjuncts], f"more {x}"


# ------------------------------------------------------------ checking results

def local_violations(res: Result) -> list:
    """Rule conditions that a finished completion graph fails to meet.

    Blocked nodes are read through their blockers.  An empty list means the
    graph is clash free and complete, the precondition of building a model.
    """
    tab, g = res.engine, res.graph
    t = tab.t
    status = tab.blocking(g)
    out = []
    live = [n for n in g.nodes if n.alive and status.get(n.id, 0) != 2]
    for n in live:
        lab = n.label
        for c in tab.internal:
            if c not in lab:
                out.append(f"node {n.id} misses axiom {t.concepts[c]}")
        for c in lab:
            k = t.kind[c]
            if k == BOT_K or (k != TOP_K and t.neg(c) in lab):
                out.append(f"node {n.id} clash on {t.concepts[c]}")
            elif k == AND_K and not all(a in lab for a in t.args[c]):
                out.append(f"node {n.id} open conjunction {t.concepts[c]}")
            elif k == OR_K and not any(a in lab for a in t.args[c]):
                out.append(f"node {n.id} open disjunction {t.concepts[c]}")
            elif k in (ATOM_K, NATOM_K):
                for a in tab.absorbed.get(c, ()):
                    if a not in lab:
                        out.append(f"node {n.id} misses unfolding {t.concepts[a]}")
            elif k in (ALL_K, LESS_K, MORE_K):
                w, f = t.rexp[c], t.args[c]
                nbrs = [y for y in n.edges if g.nodes[y].alive]
                vals = [(y, tab.holds(g, n.id, y, w)[0]) for y in nbrs]
                if any(v is None for _, v in vals):
                    out.append(f"node {n.id} undecided role for {t.concepts[c]}")
                    continue
                hits = [y for y, v in vals if v]
                if k == ALL_K:
                    if any(f not in g.nodes[y].label for y in hits):
                        out.append(f"node {n.id} unmet {t.concepts[c]}")
                elif k == LESS_K:
                    if any(f not in g.nodes[y].label and t.neg(f) not in g.nodes[y].label
                           for y in hits):
                        out.append(f"node {n.id} unchosen filler for {t.concepts[c]}")
                    if sum(f in g.nodes[y].label for y in hits) > t.num[c]:
                        out.append(f"node {n.id} too many successors for {t.concepts[c]}")
                elif status.get(n.id, 0) == 0:
                    if sum(f in g.nodes[y].label for y in hits) < t.num[c]:
                        out.append(f"node {n.id} too few successors for {t.concepts[c]}")
    for clause in tab.clauses:
        if not any(all(tab._lit(g, lit)[0] is True for lit in opt) for opt in clause):
            out.append("unsatisfied clause")
    return out


def folded_model(res: Result):
    """Interpretation from a finished graph, with edges into blocked nodes
    redirected to their blockers.  Valid for many but not all graphs
    (number restrictions on inverse roles can be broken by the folding)."""
    from .oracle import FiniteInterpretation

    tab, g = res.engine, res.graph
    t = tab.t
    status = tab.blocking(g)
    blocker = {}
    sigs = {}
    for n in sorted((n for n in g.nodes if n.alive), key=lambda n: (n.depth, n.id)):
        if n.root or status.get(n.id) == 2:
            continue
        p = g.nodes[n.parent]
        sig = (frozenset(n.label), frozenset(p.label), frozenset(p.edges.get(n.id, {})))
        if status.get(n.id) == 1:
            a = p
            while not a.root:
                if sigs.get(a.id) == sig:
                    blocker[n.id] = a.id
                    break
                a = g.nodes[a.parent]
        else:
            sigs[n.id] = sig
    keep = [n for n in g.nodes if n.alive and status.get(n.id, 0) == 0]
    ids = {n.id for n in keep}
    concepts: dict = {}
    roles: dict = {}
    for n in keep:
        for c in n.label:
            if t.kind[c] == ATOM_K:
                concepts.setdefault(t.concepts[c].name, set()).add(n.id)
        for y, rs in n.edges.items():
            z = blocker.get(y, y)
            if z not in ids:
                continue
            for r in rs:
                role = t.roles[r]
                pair = (z, n.id) if role.inverse else (n.id, z)
                roles.setdefault(role.name, set()).add(pair)
    inds = {a: i for a, i in g.inds.items()}
    return FiniteInterpretation(tuple(sorted(ids)),
                                {k: frozenset(v) for k, v in concepts.items()},
                                {k: frozenset(v) for k, v in roles.items()}, inds)


def _inds(ax) -> tuple:
    if isinstance(ax, ConceptAssertion):
        return (ax.ind,)
    return (ax.a, ax.b)


def _run_with_stack(fn):
    out = {}

    def target():
        try:
            out["value"] = fn()
        except BaseException as e:  # re-raised in the caller's thread
            out["error"] = e

    old = threading.stack_size()
    threading.stack_size(512 * 1024 * 1024)
    try:
        th = threading.Thread(target=target)
        th.start()
        th.join()
    finally:
        threading.stack_size(old)
    if "error" in out:
        raise out["error"]
    return out["value"]


def check(kb, limits: Limits | None = None, trace: bool = False) -> Result:
    """Run the tableau on an ALCQIb knowledge base."""
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 200_000))
    try:
        return _run_with_stack(lambda: Tableau(kb, limits, trace).run())
    finally:
        sys.setrecursionlimit(limit)


def is_consistent(kb, limits: Limits | None = None) -> bool:
    return check(kb, limits).consistent


def eval_role_expr(w, pos: set, neg: set = frozenset(), tree_edge: bool = True) -> bool | None:
    """Evaluate a role slot over an edge with the given role literals.

    On tree edges absent roles count as false; on edges between individuals
    an absent role that is not explicitly negated is unknown (None).
    """
    unknown = False
    for p, n in role_dnf(w):
        if not p <= pos:
            continue
        if n & pos:
            continue
        missing = n - neg
        if missing and not tree_edge:
            unknown = True
            continue
        return True
    return None if unknown else False
