import random

import pytest

from shiqcq.dl import TOP, Atomic, Role, at_least, conj, negate, only, rbox, some
from shiqcq import entail
from shiqcq.entail import (
    Options, ab_partitions, answer, consistent, entails, entails_una, extended_kbs,
    extended_tbox, rewrite_parts, spoiler,
)
from shiqcq.kb import ConceptAssertion, GCI, make_kb
from shiqcq.oracle import countermodel
from shiqcq.query import UCQ, AnswerQuery, ConceptAtom, RoleAtom, query
from shiqcq.rollup import TreeQuery
from shiqcq.syntax import parse_kb, parse_query
from shiqcq.tableau import is_consistent
from shiqcq.translate import ExtendedKB, tr_kb

from conftest import DATA, a, b, p, running_grounding, r, x, y, z
from corpus import CASES
from gen import random_kb, random_query

A, B = Atomic("A"), Atomic("B")


def test_extended_tbox():
    assert extended_tbox([TreeQuery(some(r, A))]) == {GCI(TOP, only(r, negate(A)))}
    assert extended_tbox([]) == set()


def test_extended_kb_count(monkeypatch):
    g1 = running_grounding(a, b)
    g2 = running_grounding(b, a)
    assert len(g1.atoms) == 3 and len(g2.atoms) == 3
    kb = make_kb([], rbox(), [ConceptAssertion("a", A), ConceptAssertion("b", A)])
    monkeypatch.setattr(entail, "rewrite_parts", lambda *_: ([], [g1, g2]))
    ekbs = list(extended_kbs(kb, query(ConceptAtom(A, x))))
    assert len(ekbs) == 9
    assert len({e.extra_abox for e in ekbs}) == 9


def test_extended_kb_without_rewritings_is_base(monkeypatch):
    kb = make_kb([], rbox(), [ConceptAssertion("a", A)])
    monkeypatch.setattr(entail, "rewrite_parts", lambda *_: ([], []))
    ekbs = list(extended_kbs(kb, query(RoleAtom(p, x, y), ConceptAtom(B, y))))
    assert len(ekbs) == 1
    assert not ekbs[0].extra_tbox and not ekbs[0].extra_abox


def test_running_extended_kbs_spoil_groundings(kb, rq):
    _, G = rewrite_parts(kb, rq, Options(prune=False))
    keys = {str(g) for g in G}
    assert str(running_grounding(a, b)) in keys and str(running_grounding(b, a)) in keys


def test_running_example_una(kb, rq):
    assert entails_una(kb, rq)


def test_inconsistent_kb_entails_everything():
    kb = make_kb([], rbox(), [ConceptAssertion("a", conj(A, negate(A)))])
    assert entails_una(kb, query(RoleAtom(p, x, x)))
    assert entails(kb, query(ConceptAtom(B, x)))


def test_running_kb_loop_query_not_entailed(kb):
    q = query(RoleAtom(p, x, x))
    assert not entails_una(kb, q)
    # four distinct p-successors are forced, so five elements are needed
    assert countermodel(kb, UCQ((q,)), 4, una=True) is None
    assert countermodel(kb, UCQ((q,)), 5, una=True) is not None


def test_ab_partition_counts():
    for inds, n in (("a", 1), ("ab", 2), ("abc", 5)):
        kb = make_kb([], rbox(), [ConceptAssertion(i, A) for i in inds])
        parts = list(ab_partitions(kb, query(ConceptAtom(A, x))))
        assert len(parts) == n
        for part in parts:
            for block in part.blocks:
                assert all(part.rep[i] in block for i in block)


def test_partition_substitutes_query():
    kb = make_kb([], rbox(), [ConceptAssertion("a", A), ConceptAssertion("b", B)])
    q = query(RoleAtom(r, a, b))
    merged = next(pt for pt in ab_partitions(kb, q) if len(pt.blocks) == 1)
    assert merged.query.disjuncts[0] == query(RoleAtom(r, a, a))


def test_two_individuals_example():
    kb = make_kb([], rbox(), [ConceptAssertion("a", A), ConceptAssertion("b", B)])
    q = query(ConceptAtom(A, x), ConceptAtom(B, x))
    assert not entails(kb, q, una=True)
    assert not entails(kb, q, una=False)
    assert countermodel(kb, UCQ((q,)), 3, una=False) is not None


def test_answers():
    kb = make_kb([], rbox(), [ConceptAssertion("a", A), ConceptAssertion("b", B)])
    assert answer(kb, AnswerQuery(query(ConceptAtom(A, x)), (x,))) == [("a",)]
    assert answer(kb, AnswerQuery(query(ConceptAtom(A, x)), ())) == [()]
    assert answer(kb, AnswerQuery(query(ConceptAtom(A, x), ConceptAtom(B, x)), ())) == []


def test_descendants_example():
    son, daughter, desc = Role("hasSon"), Role("hasDaughter"), Role("hasDescendant")
    rb = rbox([(son, desc), (daughter, desc)], ["hasDescendant"])
    kb = make_kb([], rb, [ConceptAssertion("Mary", some(son, some(daughter, TOP))),
                          ConceptAssertion("Bob", at_least(1, daughter, TOP))])
    q = query(RoleAtom(son, x, y), RoleAtom(daughter, y, z), RoleAtom(desc, x, z))
    got = answer(kb, AnswerQuery(q, (x,)), una=True)
    assert got == [("Mary",)]


def test_cnf_dispatch():
    kb = make_kb([GCI(A, some(r, B))], rbox(), [ConceptAssertion("a", A)])
    q1 = query(ConceptAtom(A, x), RoleAtom(r, y, z), ConceptAtom(B, z))
    q2 = query(ConceptAtom(Atomic("C"), x), ConceptAtom(A, y))
    u = UCQ((q1,))
    parts = [query(ConceptAtom(A, x)), query(RoleAtom(r, y, z), ConceptAtom(B, z))]
    assert entails(kb, u, una=True) == all(entails(kb, q, una=True) for q in parts)
    assert entails(kb, u, una=True)
    assert entails(kb, UCQ((query(ConceptAtom(B, x), ConceptAtom(A, y)),)), una=True)
    assert not entails(kb, UCQ((q2,)), una=True)


def test_una_and_non_una_on_data_files():
    kb = parse_kb((DATA / "chain.kb").read_text())
    q = parse_query((DATA / "chain.q").read_text())
    assert entails(kb, q, una=True)
    assert entails(kb, q, una=False)


@pytest.mark.parametrize("una", [True, False])
@pytest.mark.parametrize("name,kb_text,q_text", CASES, ids=[c[0] for c in CASES])
def test_corpus_agrees_with_search(name, kb_text, q_text, una):
    kb, u = parse_kb(kb_text), parse_query(q_text)
    got = entails(kb, u, una=una)
    cm = countermodel(kb, u if isinstance(u, UCQ) else UCQ((u,)), 6, una)
    assert got == (cm is None), name


def test_redundant_spoilers_do_not_help(kb, rq):
    # adding spoilers to an inconsistent extended KB keeps it inconsistent
    T, G = rewrite_parts(kb, rq)
    tbox = frozenset(extended_tbox(T))
    for g in G[:3]:
        atoms = sorted(g.atoms)
        ekb = ExtendedKB(kb, tbox, frozenset(spoiler(at) for at in atoms))
        base = ExtendedKB(kb, tbox, frozenset([spoiler(atoms[0])]))
        if not is_consistent(tr_kb(base)):
            assert not is_consistent(tr_kb(ekb))
    assert consistent(kb)


def test_random_agreement():
    rng = random.Random(2024)
    checked = 0
    for _ in range(40):
        kb = random_kb(rng)
        q = random_query(rng, rng.randint(1, 3), list(kb.individuals))
        cm = countermodel(kb, UCQ((q,)), 4, una=True)
        got = entails(kb, q, una=True)
        if cm is not None:
            assert not got, (str(kb), str(q))
        checked += 1
    assert checked == 40
