from shiqcq.dl import (
    Atomic, AtLeast, AtMost, Exists, Forall, Not, RLit, RoleConj, RoleExpr, at_least,
    conj, only, rbox, rconj, role_and, some, subconcepts, tc_set,
)
from shiqcq.entail import consistent
from shiqcq.kb import (
    ConceptAssertion, Inequality, NegRoleAssertion, RoleAssertion, make_kb,
)
from shiqcq.syntax import parse_kb
from shiqcq.tableau import is_consistent
from shiqcq.translate import (
    X_PREFIX, ExtendedKB, Translator, aux_tbox, tr_concept, tr_kb, up_close,
)

from conftest import p, r, s, t

A, B, C = Atomic("A"), Atomic("B"), Atomic("C")


def running_rbox():
    return rbox([(t, t.inv()), (s.inv(), r)], ["r", "t"])


def test_up_close():
    rb = running_rbox()
    assert up_close(rconj(s.inv()), rb) == role_and([s.inv(), r])
    assert up_close(rconj(t), rb) == role_and([t, t.inv()])
    assert up_close(rconj(r), rbox()) == RLit(r)


def test_tc_set():
    rb = running_rbox()
    assert tc_set(rconj(r), rb) == {rconj(r)}
    assert tc_set(rconj(p), rb) == frozenset()
    assert tc_set(rconj(r, t), rb) == {rconj(r, t), rconj(r, t.inv())}


def test_tr_concept():
    rb = running_rbox()
    c, _ = tr_concept(conj(A, Not(B)), rb)
    assert c == conj(A, Not(B))
    c, _ = tr_concept(at_least(2, p, C), rb)
    assert c == AtLeast(2, up_close(rconj(p), rb), C)
    tr = Translator(rb)
    c = tr.concept(some(r, A))
    assert isinstance(c, Not) and c.operand == tr.fresh(rconj(r), Not(A))


def test_aux_tbox():
    rb = running_rbox()
    assert len(aux_tbox(only(p, A), rb)) == 2
    tr = Translator(rb)
    got = aux_tbox(only(r, A), rb, tr)
    x = tr.fresh(rconj(r), A)
    assert len(got) == 3
    assert any(g.sub == x and g.sup == Forall(up_close(rconj(r), rb), x) for g in got)
    assert aux_tbox(A, rb) == set()


def test_fresh_names_stable_and_injective():
    tr = Translator(running_rbox())
    n1 = tr.fresh(rconj(r), A)
    assert tr.fresh(rconj(r), A) == n1
    assert tr.fresh(rconj(r), B) != n1
    assert tr.fresh(rconj(s), A) != n1
    assert n1.name.startswith(X_PREFIX)


def test_tr_kb_assertions():
    rb = running_rbox()
    kb = make_kb([], rb, [RoleAssertion(r, "a", "b"), Inequality("a", "b")])
    out = tr_kb(kb)
    assert {ax for ax in out.abox if isinstance(ax, RoleAssertion)} == {RoleAssertion(r, "a", "b")}
    assert Inequality("a", "b") in out.abox
    spoiled = tr_kb(ExtendedKB(kb, extra_abox=frozenset([NegRoleAssertion(r, "a", "b")])))
    negs = {ax for ax in spoiled.abox if isinstance(ax, NegRoleAssertion)}
    assert negs == {NegRoleAssertion(r, "a", "b"), NegRoleAssertion(s.inv(), "a", "b")}


def _role_slots(c):
    for d in subconcepts(c):
        if isinstance(d, (Exists, Forall, AtLeast, AtMost)):
            yield d.role


def test_emitted_role_expressions_are_safe(kb):
    out = tr_kb(kb)
    concepts = [g.sub for g in out.tbox] + [g.sup for g in out.tbox]
    concepts += [ax.concept for ax in out.abox if isinstance(ax, ConceptAssertion)]
    for c in concepts:
        for w in _role_slots(c):
            assert not isinstance(w, RoleConj)
            assert isinstance(w, RoleExpr) and w.is_safe()


def test_negated_transitive_role_sees_paths():
    text = ("(kb (tbox) (rbox (transitive r)) "
            "(abox (related a r b) (related b r c) (not-related a r c)))")
    assert not consistent(parse_kb(text))
    text = ("(kb (tbox (implies A (some r B))) (rbox (transitive r)) "
            "(abox (instance a A) (not-related a r c) (instance c (all (inv r) (not B)))))")
    assert consistent(parse_kb(text))


def test_negated_transitive_role_through_sub_role():
    text = ("(kb (tbox) (rbox (subrole s r) (transitive r)) "
            "(abox (related a s b) (related b r c) (not-related a r c)))")
    assert not consistent(parse_kb(text))
    text = ("(kb (tbox) (rbox (subrole s r) (transitive r)) "
            "(abox (related a s b) (related b r c) (not-related a s c)))")
    assert consistent(parse_kb(text))


def test_translation_preserves_running_consistency(kb):
    assert is_consistent(tr_kb(kb))

