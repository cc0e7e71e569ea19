import pytest

from shiqcq.dl import (
    BOTTOM, TOP, Atomic, Not, RLit, RNot, ROr, RAnd, at_least, at_most, conj, rbox,
    some,
)
from shiqcq.entail import consistent
from shiqcq.errors import ResourceLimit
from shiqcq.kb import GCI, ConceptAssertion, make_kb
from shiqcq.oracle import FiniteInterpretation, bounded_model_search, close_roles
from shiqcq.syntax import parse_kb
from shiqcq.tableau import (
    check, Limits, eval_role_expr, folded_model, is_consistent,
    local_violations,
)
from shiqcq.translate import tr_kb

from conftest import r, s, t
from corpus import CASES

A, B = Atomic("A"), Atomic("B")


def alc(tbox=(), abox=(), rb=None):
    return tr_kb(make_kb(tbox, rb or rbox(), abox))


def test_trivial_clash():
    assert not is_consistent(alc(abox=[ConceptAssertion("a", conj(A, Not(A)))]))


def test_running_kb_consistent(kb):
    res = check(tr_kb(kb))
    assert res.consistent
    assert local_violations(res) == []


def test_number_clash():
    c = conj(at_least(2, r, TOP), at_most(1, r, TOP))
    assert not is_consistent(alc(abox=[ConceptAssertion("a", c)]))
    c = conj(at_least(2, r, A), at_most(1, r, TOP))
    assert not is_consistent(alc(abox=[ConceptAssertion("a", c)]))
    c = conj(at_least(2, r, A), at_most(1, r, B))
    assert is_consistent(alc(abox=[ConceptAssertion("a", c)]))


def test_eval_role_expr():
    assert eval_role_expr(RLit(r), {r, s}) is True
    assert eval_role_expr(RAnd((RLit(r), RNot(RLit(s)))), {r}) is True
    assert eval_role_expr(ROr((RLit(r), RLit(s))), {t}) is False
    # between individuals an unmentioned role is open
    assert eval_role_expr(RAnd((RLit(r), RNot(RLit(s)))), {r}, tree_edge=False) is None
    assert eval_role_expr(RAnd((RLit(r), RNot(RLit(s)))), {r}, {s}, tree_edge=False) is True


def test_depth_one_not_blocked():
    res = check(alc(abox=[ConceptAssertion("a", some(r, A))]))
    status = res.engine.blocking(res.graph)
    assert res.consistent and 1 not in status.values()


def test_cyclic_tbox_terminates_with_blocking():
    res = check(alc(tbox=[GCI(TOP, some(r, A))], abox=[ConceptAssertion("a", A)]))
    assert res.consistent
    status = res.engine.blocking(res.graph)
    assert 1 in status.values()
    assert local_violations(res) == []


def test_blocking_with_inverse_functional():
    kb = make_kb([GCI(A, some(r, A)), GCI(TOP, at_most(1, r.inv(), TOP))], rbox(),
                 [ConceptAssertion("a", A)])
    assert consistent(kb)


def test_trace_is_deterministic(kb):
    first = check(tr_kb(kb), trace=True).trace
    assert first
    assert check(tr_kb(kb), trace=True).trace == first


def test_node_limit():
    with pytest.raises(ResourceLimit):
        check(alc(tbox=[GCI(TOP, some(r, A)), GCI(A, some(s, B))],
                  abox=[ConceptAssertion("a", A)]), Limits(max_nodes=2))


def _closed(m, rb):
    return FiniteInterpretation(m.domain, m.concepts, close_roles(m.roles, rb), m.inds)


def test_folded_model_satisfies_kb(kb):
    # the graph stores only the roles it needed; close them under the hierarchy
    m = _closed(folded_model(check(tr_kb(kb))), kb.rbox)
    assert m.satisfies_kb(kb)


def test_at_most_zero_keeps_dependencies():
    # the first choice for the disjunction clashes on an at-most-zero
    # restriction; the search has to come back and try the second one
    text = ("(kb (tbox) (rbox) (abox (instance a (or (some r A) B)) "
            "(instance a (at-most 0 r A))))")
    assert consistent(parse_kb(text))
    text = ("(kb (tbox) (rbox) (abox (instance a (or (some r A) (some s A))) "
            "(instance a (at-most 0 r A)) (related a s b)))")
    assert consistent(parse_kb(text))


def test_universal_gci_is_enforced():
    text = ("(kb (tbox (implies top (all r A))) (rbox) "
            "(abox (related a r b) (instance b (not A))))")
    assert not consistent(parse_kb(text))
    text = "(kb (tbox (implies top B)) (rbox) (abox (instance a (not B))))"
    assert not consistent(parse_kb(text))


def test_bottom_gci():
    assert not is_consistent(alc(tbox=[GCI(A, BOTTOM)], abox=[ConceptAssertion("a", A)]))
    assert is_consistent(alc(tbox=[GCI(A, BOTTOM)], abox=[ConceptAssertion("a", B)]))


@pytest.mark.parametrize("name,kb_text,_q", CASES, ids=[c[0] for c in CASES])
def test_corpus_consistency_agrees_with_search(name, kb_text, _q):
    kb = parse_kb(kb_text)
    assert consistent(kb) == (bounded_model_search(kb, 4) is not None)


def test_roles_with_hierarchy_do_not_break_folding():
    kb = make_kb([GCI(A, some(r, A))], rbox([(r, t)], ["t"]), [ConceptAssertion("a", A)])
    res = check(tr_kb(kb))
    assert res.consistent
    assert _closed(folded_model(res), kb.rbox).satisfies_kb(kb)
