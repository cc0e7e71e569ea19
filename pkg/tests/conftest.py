from pathlib import Path

import pytest

from shiqcq.dl import TOP, Atomic, Role, at_least, conj, rbox, rconj, some
from shiqcq.kb import GCI, ConceptAssertion, RoleAssertion, make_kb
from shiqcq.query import ConceptAtom, Ind, RoleAtom, Var, query

DATA = Path(__file__).resolve().parent.parent / "data"

r, s, t, p = Role("r"), Role("s"), Role("t"), Role("p")
u, x, y, z = Var("u"), Var("x"), Var("y"), Var("z")
# variables introduced by rewriting carry a leading underscore
ux, y2 = Var("_ux"), Var("_y2")
a, b = Ind("a"), Ind("b")


def running_kb():
    A = Atomic
    tbox = [GCI(A("Ck"), at_least(4, p)),
            GCI(A("C3"), at_least(3, p)),
            GCI(A("D2"), conj(some(s.inv()), some(t)))]
    rb = rbox([(t, t.inv()), (s.inv(), r)], ["r", "t"])
    abox = [RoleAssertion(r, "a", "b"),
            ConceptAssertion("a", conj(some(p, A("Ck")), some(p, A("C")), some(r.inv(), A("C3")))),
            ConceptAssertion("b", conj(some(p, A("D1")), some(r, A("D2"))))]
    return make_kb(tbox, rb, abox)


def running_query():
    return query(RoleAtom(r, u, x), RoleAtom(r, x, y), RoleAtom(t, y, y),
                 RoleAtom(s, z, y), RoleAtom(r, u, z))


def q_split():
    return query(RoleAtom(r, u, ux), RoleAtom(r, ux, x), RoleAtom(r, x, y), RoleAtom(t, y, y),
                 RoleAtom(s, z, y), RoleAtom(r, x, z))


def q_loop():
    return query(RoleAtom(r, u, ux), RoleAtom(r, ux, x), RoleAtom(r, x, y), RoleAtom(t, y, y2),
                 RoleAtom(t, y2, y), RoleAtom(s, z, y), RoleAtom(r, x, z))


def q_forest():
    return query(RoleAtom(r, u, ux), RoleAtom(r, ux, x), RoleAtom(r, x, y), RoleAtom(t, y, y2),
                 RoleAtom(t, y2, y), RoleAtom(s, z, y), RoleAtom(r, y, z))


def tree_concept_x():
    return some(r, conj(some(rconj(r, s.inv()), TOP), some(rconj(t, t.inv()), TOP)))


def running_grounding(first: Ind, second: Ind):
    """Ground query with ux mapped to first and x mapped to second."""
    return query(RoleAtom(r, first, second), ConceptAtom(some(r.inv()), first),
                 ConceptAtom(tree_concept_x(), second))


@pytest.fixture(scope="session")
def kb():
    return running_kb()


@pytest.fixture(scope="session")
def rq():
    return running_query()
