import random

import pytest

from shiqcq.dl import TOP, Atomic, Role, conj, rbox, rconj, some
from shiqcq.kb import make_kb
from shiqcq.oracle import FiniteInterpretation
from shiqcq.query import ConceptAtom, EqAtom, RoleAtom, Var, query
from shiqcq.rewrite import canonical, subquery_at, tree_mapping
from shiqcq.rollup import (
    NotTreeShaped, candidate_groundings, ground_mappings, ground_query, groundings_of,
    query_concept, trees_of,
)

from conftest import a, b, running_grounding, q_forest, r, s, t, tree_concept_x, u, ux, x, y, z

A, B = Atomic("A"), Atomic("B")
X = [Var(f"x{i}") for i in range(1, 5)]


def fr_candidate():
    return canonical(q_forest().atoms, {ux, x})


def test_query_concept_examples():
    q = q_forest()
    assert query_concept(subquery_at(q, ux, {ux, x}), ux) == some(r.inv())
    assert query_concept(subquery_at(q, x, {ux, x}), x) == tree_concept_x()
    assert query_concept(query(ConceptAtom(A, x)), x) == A


def test_query_concept_rejects_cycles(rq):
    with pytest.raises(NotTreeShaped):
        query_concept(rq, x)


def test_ground_mappings():
    c = fr_candidate()
    maps = ground_mappings(c, ["a", "b"])
    images = sorted(tuple(sorted((str(k), v.name) for k, v in m.items())) for m in maps)
    assert len(maps) == 2
    assert len({tuple(v for _, v in img) for img in images}) == 2
    four = canonical(q_forest().atoms | {RoleAtom(r, u, Var("w"))}, {u, x, y, z})
    assert ground_mappings(four, ["a", "b"]) == []
    named = canonical({RoleAtom(r, a, x)}, {a, x})
    for m in ground_mappings(named, ["a", "b", "c"]):
        assert m[a] == a


def test_ground_query_examples():
    c = fr_candidate()
    got = {str(ground_query(c, tau)) for tau in ground_mappings(c, ["a", "b"])}
    assert got == {str(running_grounding(a, b)), str(running_grounding(b, a))}


def test_all_root_candidate_is_substitution():
    c = canonical({RoleAtom(r, x, y), RoleAtom(s, y, x)}, {x, y})
    for g in candidate_groundings(c, ["a", "b"]):
        assert {str(at.concept) for at in g.concept_atoms} == {"top"}
        assert len(g.role_atoms) == 2


def test_groundings_of_running(kb, rq):
    got = {str(g) for g in groundings_of(rq, kb)}
    assert str(running_grounding(a, b)) in got
    assert str(running_grounding(b, a)) in got


def test_trees_of_chain():
    kb = make_kb([], rbox([(r, t)], ["t"]), [])
    q = query(RoleAtom(r, X[0], X[1]), RoleAtom(r, X[1], X[2]), RoleAtom(r, X[2], X[3]),
              RoleAtom(t, X[0], X[3]))
    rolled = some(rconj(r, t), some(rconj(r, t), some(rconj(r, t), TOP)))
    assert rolled in {tq.concept for tq in trees_of(q, kb)}


def test_trees_of_with_individual_is_empty(kb):
    assert trees_of(query(RoleAtom(r, a, x)), kb) == []


# ------------------------------------------------ rolled-up concepts

def _random_tree_query(rng):
    n = rng.randint(1, 4)
    vs = [Var(f"v{i}") for i in range(n)]
    atoms = set()
    for i in range(1, n):
        parent = vs[rng.randrange(i)]
        role = Role(rng.choice("rs"), rng.random() < 0.4)
        atoms.add(RoleAtom(role, parent, vs[i]) if rng.random() < 0.5
                  else RoleAtom(role.inv(), vs[i], parent))
        if rng.random() < 0.3:
            atoms.add(RoleAtom(Role("s"), parent, vs[i]))
    for v in vs:
        if rng.random() < 0.4:
            atoms.add(ConceptAtom(rng.choice([A, B]), v))
    if not atoms:
        atoms.add(ConceptAtom(A, vs[0]))
    if n > 1 and rng.random() < 0.2:
        extra = Var("e")
        atoms.add(EqAtom(vs[-1], extra))
    return query(*atoms), vs[0]


def _random_interpretation(rng):
    n = rng.randint(1, 4)
    d = tuple(range(n))
    return FiniteInterpretation(
        d, {"A": frozenset(e for e in d if rng.random() < 0.5),
            "B": frozenset(e for e in d if rng.random() < 0.5)},
        {k: frozenset((i, j) for i in d for j in d if rng.random() < 0.3) for k in "rs"},
        {})


def test_query_concept_matches_semantics():
    rng = random.Random(5)
    for _ in range(150):
        q, root = _random_tree_query(rng)
        if tree_mapping(q, root) is None:
            continue
        c = query_concept(q, root)
        for _ in range(8):
            i = _random_interpretation(rng)
            assert i.satisfies(q) == bool(i.ext(c)), (str(q), str(c))


def test_query_concept_root_independent():
    q = query(RoleAtom(r, x, y), RoleAtom(s, x, y), ConceptAtom(A, y))
    assert query_concept(q, x) == some(rconj(r, s), A)
    assert query_concept(q, y) == conj(some(rconj(r.inv(), s.inv())), A)
    rng = random.Random(9)
    for _ in range(60):
        q, root = _random_tree_query(rng)
        if tree_mapping(q, root) is None:
            continue
        renamed = q.subst({v: Var(v.name + "_") for v in q.vars})
        root2 = Var(root.name + "_")
        assert str(query_concept(q, root)) == str(query_concept(renamed, root2))


def test_individual_root():
    q = query(RoleAtom(r, a, x), ConceptAtom(A, x))
    assert query_concept(q, a) == some(r, A)
