import pytest

from shiqcq.dl import Atomic, conj, negate, rbox
from shiqcq.kb import ConceptAssertion, RoleAssertion, make_kb
from shiqcq.oracle import (
    FiniteInterpretation, bounded_model_search, classify_match, close_roles, countermodel,
    enumerate_matches, unravel,
)
from shiqcq.query import ConceptAtom, EqAtom, RoleAtom, query
from shiqcq.syntax import parse_kb, parse_query

from conftest import q_forest, q_split, r, running_kb, s, u, ux, x, y, y2, z
from corpus import CASES

A = Atomic("A")


def test_search_inconsistent():
    kb = make_kb([], rbox(), [ConceptAssertion("a", conj(A, negate(A)))])
    for n in range(1, 5):
        assert bounded_model_search(kb, n) is None


def test_search_single_element():
    m = bounded_model_search(make_kb([], rbox(), [ConceptAssertion("a", A)]), 3)
    assert len(m.domain) == 1 and m.inds["a"] in m.concepts["A"]


def test_search_running_kb():
    kb = running_kb()
    m = bounded_model_search(kb, 6)
    assert m is not None and m.satisfies_kb(kb)


def test_search_respects_una():
    kb = parse_kb("(kb (tbox) (rbox) (abox (instance a A) (instance b A)))")
    assert len(bounded_model_search(kb, 3, una=True).domain) == 2
    assert len(bounded_model_search(kb, 3).domain) == 1


def test_enumerate_matches():
    i = FiniteInterpretation((0, 1), {"A": frozenset({1})}, {"r": frozenset({(0, 1), (1, 1)})})
    assert enumerate_matches(query(ConceptAtom(A, x)), i) == [{x: 1}]
    got = enumerate_matches(query(RoleAtom(r, x, y), EqAtom(x, y)), i)
    assert got == [{x: 1, y: 1}]
    assert len(enumerate_matches(query(RoleAtom(r, x, y)), i)) == 2


def _forest_model():
    a0, b0 = ("a", ()), ("b", ())
    U, Y, Y2, Z = ("a", (0,)), ("b", (0,)), ("b", (0, 0)), ("b", (0, 1))
    roles = {"r": {(U, a0), (a0, b0), (b0, Y), (Y, Z), (b0, Z)},
             "t": {(Y, Y2), (Y2, Y), (Y, Y)},
             "s": {(Z, Y)}}
    i = FiniteInterpretation((a0, b0, U, Y, Y2, Z), {},
                             {k: frozenset(v) for k, v in roles.items()}, {"a": a0, "b": b0})
    pi = {u: U, ux: a0, x: b0, y: Y, y2: Y2, z: Z}
    return i, pi


def test_classify_running_matches():
    i, pi = _forest_model()
    fr = q_forest()
    assert i.satisfies(fr)
    assert classify_match({v: pi[v] for v in fr.terms}, fr, i) == "forest"
    sr = q_split()
    assert classify_match({v: pi[v] for v in sr.terms}, sr, i) == "split"


def test_classify_tree_and_none():
    i, pi = _forest_model()
    q = query(RoleAtom(r, x, y), RoleAtom(s, z, y))
    assert classify_match({x: pi[x], y: pi[y], z: pi[z]}, q, i) == "tree"
    q = query(RoleAtom(r, u, y))
    assert classify_match({u: pi[u], y: pi[y]}, q, i) == "none"


def test_classify_every_match_has_a_shape():
    i, _ = _forest_model()
    for q in (q_forest(), q_split(), query(RoleAtom(r, x, y), RoleAtom(r, y, z))):
        for pi in enumerate_matches(q, i):
            assert classify_match(pi, q, i) in {"split", "forest", "tree"}


def test_unravel_transitive_loop():
    # a -r-> d with an r-loop at d; r transitive
    i = FiniteInterpretation((0, 1), {"D": frozenset({1})},
                             {"r": frozenset({(0, 1), (1, 1)})}, {"a": 0})
    kb = make_kb([], rbox([], ["r"]), [RoleAssertion(r, "a", "a")])
    j = unravel(i, kb, depth=3)
    ds = sorted(j.concepts["D"], key=lambda e: len(e[1]))
    assert max(len(w) for _, w in ds) == 3
    for d in ds:
        for e in ds:
            if len(d[1]) < len(e[1]) and e[1][:len(d[1])] == d[1]:
                assert (d, e) in j.roles["r"]
        assert (j.inds["a"], d) in j.roles["r"]


def test_unravel_maps_back_into_the_model():
    kb = running_kb()
    i = bounded_model_search(kb, 6)
    # tag each element so the tail of an unravelled element can be read off
    tagged = FiniteInterpretation(i.domain, {**i.concepts, **{f"E{d}": frozenset({d}) for d in i.domain}},
                                  close_roles(i.roles, kb.rbox), i.inds)
    j = unravel(tagged, kb, depth=3)
    tail = {}
    for name, ext in j.concepts.items():
        if name.startswith("E"):
            for e in ext:
                assert e not in tail
                tail[e] = int(name[1:])
    assert set(tail) == set(j.domain)
    for name, pairs in j.roles.items():
        for d, e in pairs:
            assert (tail[d], tail[e]) in tagged.roles.get(name, frozenset())
    assert {j.inds[a] for a in kb.individuals} == {(a, ()) for a in kb.individuals}


@pytest.mark.parametrize("name,kb_text,q_text", CASES, ids=[c[0] for c in CASES])
def test_unravel_keeps_countermodels(name, kb_text, q_text):
    kb, u_ = parse_kb(kb_text), parse_query(q_text)
    cm = countermodel(kb, u_, 6, una=True)
    if cm is None:
        return
    q = u_.disjuncts[0]
    j = unravel(cm, kb, depth=max(4, len(q.vars)))
    assert not j.satisfies(q)
