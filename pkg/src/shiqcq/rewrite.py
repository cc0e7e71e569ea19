"""Query rewriting: collapsings, split, loop and forest rewritings.

A rewriting candidate is a query paired with a set of root terms.  Root
terms are the ones that will be mapped to named individuals; every other
term hangs in a tree below exactly one root (or, with no roots at all, the
whole query is one tree).

The split, loop and forest stages do not enumerate every syntactically
allowed replacement.  They enumerate the replacements that follow the shape
of a forest-like model: role atoms linking different trees are routed through
the tree roots, loops are unfolded through one neighbour, and atoms inside a
tree follow the unique tree path between their endpoints, possibly through
fresh branching terms.  Anything else is redundant for entailment.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, permutations, product
from typing import Iterable, Iterator

from more_itertools import set_partitions

from .dl import RBox, Role
from .errors import ResourceLimit
from .query import (
    Atom, EqAtom, Ind, Query, RoleAtom, Term, Var, rep, term_key,
)

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class Candidate:
    query: Query
    roots: frozenset

    @cached_property
    def key(self) -> str:
        return str(self)

    def __str__(self) -> str:
        body = "\n".join("  " + str(a) for a in sorted(self.query.atoms))
        roots = " ".join(str(t) for t in sorted(self.roots, key=term_key))
        return f"(query\n{body})\nroots: {roots}"


# ------------------------------------------------------------------ shapes

def reach(t: Term, q: Query, roots: Iterable[Term]) -> frozenset:
    """Terms reachable from t without passing through roots of other classes."""
    roots = frozenset(roots)
    home = q.cls[t]
    seen = {t}
    stack = [t]
    while stack:
        u = stack.pop()
        for w in q.neighbours(u):
            if w in seen or (w in roots and w not in home):
                continue
            seen.add(w)
            stack.append(w)
    return frozenset(seen)


def is_root_splitting(q: Query, roots: Iterable[Term]) -> bool:
    roots = frozenset(roots)
    if not roots:
        return not q.inds
    if not set(q.inds) <= roots:
        return False
    if any(not q.cls[t] <= roots for t in roots if t in q.cls):
        return False
    if not roots <= set(q.terms):
        return False
    reps = sorted({rep(q.cls[t]) for t in roots}, key=term_key)
    reaches = [reach(t, q, roots) for t in reps]
    for i, j in combinations(range(len(reps)), 2):
        if reaches[i] & reaches[j]:
            return False
    return True


def subquery_at(q: Query, t: Term, roots: Iterable[Term]) -> Query | None:
    """Atoms over the terms reachable from t, minus loops at t.

    Returns None when nothing is left (a root with no atoms of its own).
    """
    area = reach(t, q, roots)
    home = q.cls[t]
    atoms = set()
    for a in q.atoms:
        ts = a.terms()
        if not all(x in area for x in ts):
            continue
        if isinstance(a, RoleAtom) and a.t1 in home and a.t2 in home:
            continue
        atoms.add(a)
    return Query(frozenset(atoms)) if atoms else None


def tree_mapping(q: Query, root: Term | None = None) -> dict | None:
    """Map terms to tree addresses (tuples), or None if q is not a tree.

    Equal terms share an address and every role atom joins a node to one of
    its children.  The root defaults to the individual's class if there is one.
    """
    cls = q.cls
    if root is None:
        root = q.inds[0] if q.inds else q.terms[0]
    adj: dict = {c: set() for c in q.classes}
    for a in q.role_atoms:
        c1, c2 = cls[a.t1], cls[a.t2]
        if c1 == c2:
            return None
        adj[c1].add(c2)
        adj[c2].add(c1)
    start = cls[root]
    addr = {start: ()}
    parent = {start: None}
    order = [start]
    for c in order:
        kids = sorted(adj[c] - {parent[c]}, key=lambda k: term_key(rep(k)))
        for i, k in enumerate(kids):
            if k in addr:
                return None
            addr[k] = addr[c] + (i,)
            parent[k] = c
            order.append(k)
    if len(addr) != len(adj):
        return None
    return {t: addr[cls[t]] for t in q.terms}


def is_tree_shaped(q: Query) -> bool:
    return len(q.inds) <= 1 and tree_mapping(q) is not None


def is_forest_shaped(q: Query, roots: Iterable[Term]) -> bool:
    roots = frozenset(roots)
    if not roots:
        return is_tree_shaped(q)
    for c in q.classes:
        if not c <= roots:
            continue
        t = rep(c)
        sub = subquery_at(q, t, roots)
        if sub is None:
            continue
        if len(sub.inds) > 1 or tree_mapping(sub, t) is None:
            return False
    return True


# ------------------------------------------------------------ canonical form

_SELF = Var("_")
_OTHER = Var("__")


def canonical(atoms: Iterable[Atom], roots: Iterable[Term]) -> Candidate:
    """Rename fresh variables to _v0, _v1, ... in a canonical way."""
    atoms = frozenset(atoms)
    roots = frozenset(roots)
    fresh = sorted({t for a in atoms for t in a.terms() if t.fresh}, key=term_key)
    if not fresh:
        return Candidate(Query(atoms), roots)
    touching = {v: [a for a in atoms if v in a.terms()] for v in fresh}
    colour = {}
    for v in fresh:
        m = {u: _OTHER for u in fresh}
        m[v] = _SELF
        colour[v] = (v in roots, tuple(sorted(str(a.subst(m)) for a in touching[v])))
    # refine colours by the colours of fresh neighbours until stable
    for _ in range(len(fresh)):
        index = {c: i for i, c in enumerate(sorted(set(colour.values())))}
        new = {}
        for v in fresh:
            m = {u: Var(f"_{index[colour[u]]}") for u in fresh}
            m[v] = _SELF
            new[v] = (index[colour[v]], tuple(sorted(str(a.subst(m)) for a in touching[v])))
        if len(set(new.values())) == len(set(colour.values())):
            colour = new
            break
        colour = new
    groups: dict = {}
    for v in fresh:
        groups.setdefault(colour[v], []).append(v)
    ordered = [groups[k] for k in sorted(groups)]
    best = None
    for perm in product(*(permutations(g) for g in ordered)):
        seq = [v for part in perm for v in part]
        m = {v: Var(f"_v{i}") for i, v in enumerate(seq)}
        text = sorted(str(a.subst(m)) for a in atoms)
        if best is None or text < best[0]:
            best = (text, m)
    m = best[1]
    return Candidate(Query(frozenset(a.subst(m) for a in atoms)),
                     frozenset(m.get(t, t) for t in roots))


class _Collector:
    def __init__(self, budget: int | None):
        self.budget = DEFAULT_BUDGET if budget is None else budget
        self.items: dict = {}

    def add(self, cand: Candidate) -> None:
        if cand.key not in self.items:
            if len(self.items) >= self.budget:
                raise ResourceLimit(f"more than {self.budget} rewriting candidates")
            self.items[cand.key] = cand

    def result(self) -> list:
        return [self.items[k] for k in sorted(self.items)]


# ---------------------------------------------------------------- stages

def collapsings(q: Query) -> list:
    """q extended by equality atoms, one query per coarsening of its classes."""
    classes = q.classes
    out = []
    for blocks in _partitions(len(classes)):
        atoms = set(q.atoms)
        for block in blocks:
            reps = sorted((rep(classes[i]) for i in block), key=term_key)
            for r in reps[1:]:
                atoms.add(EqAtom(reps[0], r))
        out.append(Query(frozenset(atoms)))
    return out


def _partitions(n: int) -> list:
    if n == 0:
        return [[]]
    return list(set_partitions(range(n)))


def _role_groups(q: Query) -> dict:
    """Role atoms grouped up to equality of terms: (name, class, class) -> atoms."""
    cls = q.cls
    out: dict = {}
    for a in q.role_atoms:
        out.setdefault((a.role.name, cls[a.t1], cls[a.t2]), []).append(a)
    return out


def _chain(s: Role, terms: list) -> frozenset:
    return frozenset(RoleAtom(s, terms[i], terms[i + 1]) for i in range(len(terms) - 1))


def split_rewritings(q: Query, kb, budget: int | None = None) -> list:
    out = _Collector(budget)
    for co in collapsings(q):
        for cand in _splits(co, kb.rbox):
            out.add(cand)
    return out.result()


def _splits(q: Query, rb: RBox) -> Iterator[Candidate]:
    classes = q.classes
    if any(sum(isinstance(t, Ind) for t in c) > 1 for c in classes):
        return
    n = len(classes)
    ind_ids = [i for i, c in enumerate(classes) if any(isinstance(t, Ind) for t in c)]
    free_ids = [i for i in range(n) if i not in ind_ids]
    index = {c: i for i, c in enumerate(classes)}
    groups = [(name, index[c1], index[c2], atoms)
              for (name, c1, c2), atoms in sorted(_role_groups(q).items(),
                                                  key=lambda kv: str(kv[1][0]))]
    others = frozenset(a for a in q.atoms if not isinstance(a, RoleAtom))
    for k in range(len(free_ids) + 1):
        for extra in combinations(free_ids, k):
            root_ids = sorted(ind_ids + list(extra))
            rest = [i for i in free_ids if i not in extra]
            for tree_of in _tree_assignments(root_ids, rest):
                yield from _split_with(q, classes, groups, others, set(root_ids), tree_of, rb)


def _tree_assignments(root_ids: list, rest: list) -> Iterator[dict | None]:
    """Ways to hang the non-root classes below roots or below fresh roots.

    None stands for "no roots at all": the query is one anonymous tree.
    """
    if not root_ids:
        for blocks in _partitions(len(rest)):
            if len(blocks) == 1 or not rest:
                yield None
            else:
                yield {rest[i]: ("f", b) for b, block in enumerate(blocks) for i in block}
        return
    for k in range(len(rest) + 1):
        for fresh in combinations(rest, k):
            attached = [i for i in rest if i not in fresh]
            for blocks in _partitions(len(fresh)):
                base = {i: ("r", i) for i in root_ids}
                for b, block in enumerate(blocks):
                    for j in block:
                        base[fresh[j]] = ("f", b)
                for choice in product(root_ids, repeat=len(attached)):
                    m = dict(base)
                    for i, r in zip(attached, choice):
                        m[i] = ("r", r)
                    yield m


def _split_with(q, classes, groups, others, root_ids, tree_of, rb) -> Iterator[Candidate]:
    if tree_of is None:
        yield Candidate(q, frozenset())
        return

    def top(tree):
        kind, i = tree
        return rep(classes[i]) if kind == "r" else Var(f"_s{i}")

    fixed = set(others)
    options = []
    for name, i, j, atoms in groups:
        ti, tj = tree_of[i], tree_of[j]
        ri, rj = i in root_ids, j in root_ids
        if ti == tj or (ri and rj):
            fixed.update(atoms)
            continue
        subs = rb.transitive_subroles(Role(name))
        if not subs:
            return
        a, b = rep(classes[i]), rep(classes[j])
        if ri:
            path = [a, top(tj), b]
        elif rj:
            path = [a, top(ti), b]
        else:
            path = [a, top(ti), top(tj), b]
        options.append([_chain(s, path) for s in subs])
    root_terms = {t for i in root_ids for t in classes[i]}
    tops = {top(tree) for tree in tree_of.values() if tree[0] == "f"}
    for choice in product(*options):
        atoms = frozenset(fixed).union(*choice)
        terms = {t for x in atoms for t in x.terms()}
        roots = root_terms | (tops & terms)
        nq = Query(atoms)
        if is_root_splitting(nq, roots):
            yield canonical(atoms, roots)


def loop_rewritings(cands: Iterable[Candidate], kb, budget: int | None = None) -> list:
    out = _Collector(budget)
    for c in cands:
        for r in _unloop(c, kb.rbox):
            out.add(r)
    return out.result()


def _unloop(c: Candidate, rb: RBox) -> Iterator[Candidate]:
    q, roots = c.query, c.roots
    loops = [(key, atoms) for key, atoms in sorted(_role_groups(q).items(),
                                                   key=lambda kv: str(kv[1][0]))
             if key[1] == key[2] and not key[1] <= roots]
    if not loops:
        yield c
        return
    fixed = set(q.atoms)
    options = []
    for k, ((name, home, _), atoms) in enumerate(loops):
        fixed.difference_update(atoms)
        subs = rb.transitive_subroles(Role(name))
        if not subs:
            return
        t = rep(home)
        area = _region(q, roots, t)
        partners = sorted({rep(q.cls[u]) for u in area if u not in home}, key=term_key)
        partners += [Var(f"_l{j}") for j in range(len(loops))]
        options.append([_chain(s, [t, u, t]) for s in subs for u in partners])
    for choice in product(*options):
        atoms = frozenset(fixed).union(*choice)
        if is_root_splitting(Query(atoms), roots):
            yield canonical(atoms, roots)


def _region(q: Query, roots: frozenset, t: Term) -> frozenset:
    if not roots:
        return frozenset(q.terms)
    for c in q.classes:
        if c <= roots:
            area = reach(rep(c), q, roots)
            if t in area:
                return area
    return frozenset(q.terms)


def forest_rewritings(cands: Iterable[Candidate], kb, budget: int | None = None) -> list:
    out = _Collector(budget)
    for c in cands:
        for r in _forests(c, kb.rbox):
            out.add(r)
    return out.result()


def _forests(c: Candidate, rb: RBox) -> Iterator[Candidate]:
    q, roots = c.query, c.roots
    limit = len(q.vars)
    groups = _role_groups(q)
    if roots:
        parts = []
        for k, home in enumerate(cl for cl in q.classes if cl <= roots):
            area = reach(rep(home), q, roots)
            part_classes = [cl for cl in q.classes if cl <= area]
            part_groups = {key: atoms for key, atoms in groups.items()
                           if key[1] <= area and key[2] <= area
                           and not (key[1] == home and key[2] == home)}
            parts.append((k, part_classes, part_groups))
    else:
        parts = [(0, list(q.classes), groups)]
    fixed = set(q.atoms)
    options = []
    for k, part_classes, part_groups in parts:
        for atoms in part_groups.values():
            fixed.difference_update(atoms)
        opts = _part_options(k, part_classes, part_groups, rb, limit)
        if not opts:
            return
        options.append(opts)
    for choice in product(*options):
        atoms = frozenset(fixed).union(*(a for a, _ in choice))
        steiner = sum(n for _, n in choice)
        if steiner > limit:
            continue
        nq = Query(atoms)
        if is_root_splitting(nq, roots) and is_forest_shaped(nq, roots):
            yield canonical(atoms, roots)


def _part_options(k: int, classes: list, groups: dict, rb: RBox, limit: int) -> list:
    """Replacement atom sets for the role atoms of one tree-like part.

    Each option is a pair (atoms, number of fresh branching terms).
    """
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    glist = sorted(groups.items(), key=lambda kv: str(kv[1][0]))
    keep = frozenset(a for _, atoms in glist for a in atoms)
    if _is_tree(n, [(index[c1], index[c2]) for (_, c1, c2), _ in glist]):
        return [(keep, 0)]
    forced = set()
    loose = []
    for (name, c1, c2), atoms in glist:
        i, j = index[c1], index[c2]
        subs = rb.transitive_subroles(Role(name))
        if not subs:
            if i == j:
                return []
            forced.add((min(i, j), max(i, j)))
        else:
            loose.append((i, j, atoms, subs))
    forced_atoms = frozenset(a for (name, c1, c2), atoms in glist
                             if not rb.transitive_subroles(Role(name)) for a in atoms)
    reps = [rep(c) for c in classes]
    out = []
    for nodes, edges in _xtrees(n):
        if not forced <= edges:
            continue
        adj: dict = {v: [] for v in range(nodes)}
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        name_of = {v: (reps[v] if v < n else Var(f"_f{k}_{v - n}")) for v in range(nodes)}
        per_group = []
        ok = True
        for i, j, atoms, subs in loose:
            if i == j:
                ok = False
                break
            path = _tree_path(adj, i, j)
            if len(path) == 2:
                per_group.append([frozenset(atoms)])
            elif len(path) - 1 > limit:
                ok = False
                break
            else:
                terms = [name_of[v] for v in path]
                per_group.append([_chain(s, terms) for s in subs])
        if not ok:
            continue
        for choice in product(*per_group):
            out.append((forced_atoms.union(*choice), nodes - n))
    return out


def _is_tree(n: int, edges: list) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = 0
    for u, v in set((min(e), max(e)) for e in edges):
        if u == v:
            return False
        a, b = find(u), find(v)
        if a == b:
            return False
        parent[a] = b
        count += 1
    return count == n - 1


def _tree_path(adj: dict, src: int, dst: int) -> list:
    prev = {src: None}
    stack = [src]
    while stack:
        u = stack.pop()
        if u == dst:
            break
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                stack.append(v)
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


@lru_cache(maxsize=None)
def _xtrees(n: int) -> tuple:
    """All trees over n labelled terminals plus unlabelled branching nodes of
    degree at least three, as (node count, edge set) pairs.  Branching nodes
    are numbered from n upwards."""
    if n == 0:
        return ()
    # Insert terminals one at a time.  Removing the last terminal undoes exactly
    # one insertion step, so every tree is produced once.
    trees = [(frozenset(), frozenset())]
    for t in range(1, n):
        new = []
        for edges, steiner in trees:
            for v in list(range(t)) + sorted(steiner):
                new.append((edges | {frozenset((v, t))}, steiner))
            for e in edges:
                u, v = tuple(e)
                rest = edges - {e}
                new.append((rest | {frozenset((u, t)), frozenset((t, v))}, steiner))
                s = -t
                new.append((rest | {frozenset((u, s)), frozenset((s, v)), frozenset((s, t))},
                            steiner | {s}))
            for s in steiner:
                relabelled = frozenset(frozenset(t if x == s else x for x in e) for e in edges)
                new.append((relabelled, steiner - {s}))
        trees = new
    out = []
    for edges, steiner in trees:
        num = {s: n + i for i, s in enumerate(sorted(steiner, reverse=True))}
        es = frozenset(tuple(sorted(num.get(x, x) for x in e)) for e in edges)
        out.append((n + len(steiner), es))
    return tuple(out)


def stage_candidates(q: Query, kb, stage: str, budget: int | None = None) -> list:
    """Candidates after the named stage (collapse, split, loop or forest)."""
    if stage == "collapse":
        return [Candidate(c, frozenset()) for c in collapsings(q)]
    sr = split_rewritings(q, kb, budget)
    if stage == "split":
        return sr
    lr = loop_rewritings(sr, kb, budget)
    if stage == "loop":
        return lr
    return forest_rewritings(lr, kb, budget)
