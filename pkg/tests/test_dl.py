import random
from itertools import product

from hypothesis import given, settings
from hypothesis import strategies as st

from shiqcq.dl import (
    BOTTOM, TOP, AtLeast, AtMost, Atomic, Exists, Forall, Not, Role, RoleConj,
    at_least, at_most, closure, conj, disj, inv, is_simple, negate, nnf, only,
    rbox, some, sub_role_rel, trans_roles,
)
from shiqcq.oracle import FiniteInterpretation

from conftest import p, r, s, t

A, B, C = Atomic("A"), Atomic("B"), Atomic("C")


def running_rbox():
    return rbox([(t, t.inv()), (s.inv(), r)], ["r", "t"])


def test_inv():
    assert inv(r) == Role("r", True)
    assert inv(Role("r", True)) == r
    assert inv(inv(s)) == s


def test_inv_is_involution():
    for name, flag in product("pqrs", (False, True)):
        w = Role(name, flag)
        assert inv(inv(w)) == w and inv(w) != w


def test_sub_role_examples():
    rb = running_rbox()
    assert rb.sub_role(s.inv(), r)
    assert rb.sub_role(r, r)
    assert rb.sub_role(t.inv(), t)
    assert rb.sub_role(s, r.inv())
    assert not rb.sub_role(r, s.inv())


def _closure_oracle(rb, roles):
    rel = {(w, w) for w in roles}
    for a, b in rb.inclusions:
        rel |= {(a, b), (a.inv(), b.inv())}
    changed = True
    while changed:
        new = {(a, d) for a, b in rel for c, d in rel if b == c} - rel
        changed = bool(new)
        rel |= new
    return rel


def test_sub_role_rel_properties():
    rng = random.Random(7)
    names = list("abcdefgh")
    for _ in range(40):
        incl = {(Role(rng.choice(names), rng.random() < 0.3), Role(rng.choice(names), rng.random() < 0.3))
                for _ in range(rng.randint(0, 8))}
        rb = rbox(incl, [])
        rel = sub_role_rel(rb)
        roles = rb.roles
        assert rel == _closure_oracle(rb, roles)
        for w in roles:
            assert (w, w) in rel
        for (a, b) in rel:
            assert (a.inv(), b.inv()) in rel
            for (c, d) in rel:
                if b == c:
                    assert (a, d) in rel


def test_trans_roles():
    assert trans_roles(rbox()) == frozenset()
    q = Role("q")
    got = trans_roles(rbox([(p, q)], ["q"]))
    assert got == {q, q.inv()}
    assert p not in got


def test_trans_roles_equivalence_class():
    rb = running_rbox()
    assert {t, t.inv(), r, r.inv()} <= trans_roles(rb)


def test_is_simple():
    rb = running_rbox()
    assert not is_simple(r, rb)
    assert is_simple(p, rb)
    assert is_simple(s, rb)


def test_nnf_examples():
    assert nnf(Not(conj(A, B))) == disj(Not(A), Not(B))
    assert nnf(Not(some(r, A))) == only(r, Not(A))
    assert nnf(Not(at_most(2, s, C))) == at_least(3, s, C)
    assert negate(at_least(1, s, C)) == at_most(0, s, C)
    assert negate(TOP) == BOTTOM


def test_degenerate_number_restrictions():
    assert at_least(0, s, A) == TOP
    try:
        at_most(-1, s, A)
    except ValueError:
        pass
    else:
        raise AssertionError("negative count accepted")


def test_conj_flattens_and_dedupes():
    assert conj(A, conj(B, A)) == conj(A, B)
    assert conj(A) == A
    assert conj() == TOP
    assert disj(A, TOP) == TOP
    assert conj(A, BOTTOM) == BOTTOM


def test_closure_examples():
    rb = running_rbox()
    assert closure(A, rb) == {A, Not(A)}
    assert closure(some(p, B), rb) == {some(p, B), only(p, Not(B)), B, Not(B)}
    cl = closure(only(r, A), rb)
    assert only(r, A) in cl and some(r, Not(A)) in cl


def test_closure_is_closed():
    rb = running_rbox()
    c = conj(some(r, only(s.inv(), A)), at_most(1, p, B))
    cl = closure(c, rb)
    for d in cl:
        assert closure(d, rb) <= cl


# ---------------------------------------------------------- semantics of nnf

def _concepts(depth):
    leaves = st.sampled_from([A, B, TOP, BOTTOM])
    roles = st.sampled_from([RoleConj(frozenset([r])), RoleConj(frozenset([s.inv()])),
                             RoleConj(frozenset([r, s]))])
    return st.recursive(
        leaves,
        lambda c: st.one_of(
            st.builds(Not, c),
            st.builds(lambda x, y: conj(x, y), c, c),
            st.builds(lambda x, y: disj(x, y), c, c),
            st.builds(Exists, roles, c),
            st.builds(Forall, roles, c),
            st.builds(AtLeast, st.integers(1, 2), roles, c),
            st.builds(AtMost, st.integers(0, 2), roles, c),
        ),
        max_leaves=depth)


def _interpretations():
    dom = st.integers(1, 4)

    def build(n, data):
        d = tuple(range(n))
        pairs = [(x, y) for x in d for y in d]
        return st.builds(
            lambda a, b, rr, ss: FiniteInterpretation(
                d, {"A": frozenset(a), "B": frozenset(b)},
                {"r": frozenset(rr), "s": frozenset(ss)}, {}),
            st.sets(st.sampled_from(d)), st.sets(st.sampled_from(d)),
            st.sets(st.sampled_from(pairs)), st.sets(st.sampled_from(pairs)))

    return dom.flatmap(lambda n: build(n, None))


@settings(max_examples=200, deadline=None)
@given(_concepts(6), _interpretations())
def test_nnf_preserves_extension(c, i):
    assert i.ext(nnf(c)) == i.ext(c)
    assert i.ext(negate(c)) == frozenset(i.domain) - i.ext(c)
