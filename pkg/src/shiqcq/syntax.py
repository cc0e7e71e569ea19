"""Text format for concepts, knowledge bases and queries.

Printing is canonical: operands are sorted and every construct is fully
parenthesised, so parse(print(v)) == v and print(parse(text)) is a normal form.
"""

from __future__ import annotations

from .dl import (
    BOTTOM, TOP, AtLeast, AtMost, Atomic, Concept, Exists, Forall, Not, RAnd,
    RLit, RNot, ROr, RBox, Role, RoleConj, RoleExpr, And, Or,
)
from .kb import (
    GCI, KB, ConceptAssertion, Inequality, NegRoleAssertion, RoleAssertion,
)
from .query import UCQ, AnswerQuery, ConceptAtom, EqAtom, Ind, Query, RoleAtom, Var
from .sexpr import Atom, ParseError, SList, Span, read_one

KEYWORDS = frozenset(
    "kb tbox rbox abox implies subrole transitive instance related not-related "
    "distinct top bottom not and or some all at-least at-most inv rconj query "
    "vars answer-vars atoms concept role eq ucq boolean-role".split())


def _err(x, message: str):
    raise ParseError(message, getattr(x, "span", Span("<input>", 1, 1)))


def _name(x) -> str:
    if not isinstance(x, Atom):
        _err(x, "expected a name")
    if x in KEYWORDS or x.isdigit():
        _err(x, f"reserved word or number used as a name: {x}")
    return str(x)


def _head(x) -> str:
    if not isinstance(x, SList) or not x or not isinstance(x[0], Atom):
        _err(x, "expected a parenthesised form")
    return str(x[0])


def _arity(x, n: int, what: str) -> None:
    if len(x) != n:
        _err(x, f"{what} takes {n - 1} argument(s), got {len(x) - 1}")


# ----------------------------------------------------------- roles

def parse_role(x) -> Role:
    if isinstance(x, Atom):
        return Role(_name(x))
    if _head(x) == "inv":
        _arity(x, 2, "inv")
        return Role(_name(x[1]), True)
    _err(x, "expected a role name or (inv r)")


def _role_expr(x) -> RoleExpr:
    if isinstance(x, Atom) or _head(x) == "inv":
        return RLit(parse_role(x))
    h = _head(x)
    if h == "not":
        _arity(x, 2, "not")
        return RNot(_role_expr(x[1]))
    if h in ("and", "or"):
        if len(x) < 2:
            _err(x, f"{h} needs operands")
        ops = frozenset(_role_expr(o) for o in x[1:])
        return (RAnd if h == "and" else ROr)(ops)
    _err(x, f"unknown role operator {h}")


def parse_role_slot(x):
    """Role position of a quantifier: role, (rconj ...) or (boolean-role ...)."""
    if isinstance(x, SList) and x and _head(x) == "rconj":
        if len(x) < 2:
            _err(x, "rconj needs at least one role")
        return RoleConj(frozenset(parse_role(r) for r in x[1:]))
    if isinstance(x, SList) and x and _head(x) == "boolean-role":
        _arity(x, 2, "boolean-role")
        e = _role_expr(x[1])
        if not e.is_safe():
            _err(x, "unsafe boolean role expression")
        return e
    return RoleConj(frozenset([parse_role(x)]))


# ----------------------------------------------------------- concepts

def parse_concept(x) -> Concept:
    if isinstance(x, Atom):
        if x == "top":
            return TOP
        if x == "bottom":
            return BOTTOM
        return Atomic(_name(x))
    h = _head(x)
    if h == "not":
        _arity(x, 2, "not")
        return Not(parse_concept(x[1]))
    if h in ("and", "or"):
        if len(x) < 3:
            _err(x, f"{h} needs at least two operands")
        ops = frozenset(parse_concept(o) for o in x[1:])
        if len(ops) < 2:
            _err(x, f"{h} operands must differ")
        return (And if h == "and" else Or)(ops)
    if h in ("some", "all"):
        _arity(x, 3, h)
        return (Exists if h == "some" else Forall)(parse_role_slot(x[1]), parse_concept(x[2]))
    if h in ("at-least", "at-most"):
        _arity(x, 4, h)
        n = x[1]
        if not isinstance(n, Atom) or not n.isdigit():
            _err(n, "expected a non-negative integer")
        cls = AtLeast if h == "at-least" else AtMost
        return cls(int(n), parse_role_slot(x[2]), parse_concept(x[3]))
    _err(x, f"unknown concept operator {h}")


# ----------------------------------------------------------- knowledge bases

def _section(x, name: str) -> list:
    if _head(x) != name:
        _err(x, f"expected ({name} ...)")
    return list(x[1:])


def parse_kb_expr(x) -> KB:
    if _head(x) != "kb":
        _err(x, "expected (kb ...)")
    _arity(x, 4, "kb")
    tbox = set()
    for a in _section(x[1], "tbox"):
        if _head(a) != "implies":
            _err(a, "expected (implies C D)")
        _arity(a, 3, "implies")
        tbox.add(GCI(parse_concept(a[1]), parse_concept(a[2])))
    incl, trans = set(), set()
    for a in _section(x[2], "rbox"):
        h = _head(a)
        if h == "subrole":
            _arity(a, 3, "subrole")
            incl.add((parse_role(a[1]), parse_role(a[2])))
        elif h == "transitive":
            _arity(a, 2, "transitive")
            r = parse_role(a[1])
            trans.add(r.name)
        else:
            _err(a, f"unknown rbox axiom {h}")
    abox = set()
    for a in _section(x[3], "abox"):
        h = _head(a)
        if h == "instance":
            _arity(a, 3, "instance")
            abox.add(ConceptAssertion(_name(a[1]), parse_concept(a[2])))
        elif h in ("related", "not-related"):
            _arity(a, 4, h)
            cls = RoleAssertion if h == "related" else NegRoleAssertion
            abox.add(cls(parse_role(a[2]), _name(a[1]), _name(a[3])))
        elif h == "distinct":
            _arity(a, 3, "distinct")
            abox.add(Inequality(_name(a[1]), _name(a[2])))
        else:
            _err(a, f"unknown assertion {h}")
    return KB(frozenset(tbox), RBox(frozenset(incl), frozenset(trans)), frozenset(abox))


def parse_kb(text: str, file: str = "<input>") -> KB:
    """Parse and check the simple-role side condition."""
    return parse_kb_expr(read_one(text, file)).validate()


# ----------------------------------------------------------- queries

def _query_expr(x) -> tuple:
    if _head(x) != "query":
        _err(x, "expected (query ...)")
    answer, declared, atoms = None, [], None
    for part in x[1:]:
        h = _head(part)
        if h == "answer-vars":
            answer = [Var(_name(v)) for v in part[1:]]
        elif h == "vars":
            declared = [Var(_name(v)) for v in part[1:]]
        elif h == "atoms":
            atoms = list(part[1:])
        else:
            _err(part, f"unknown query section {h}")
    if atoms is None or not atoms:
        _err(x, "query needs a non-empty (atoms ...) section")
    names = {v.name for v in declared} | {v.name for v in answer or ()}

    def term(t):
        n = _name(t)
        return Var(n) if n in names else Ind(n)

    out = set()
    for a in atoms:
        h = _head(a)
        if h == "concept":
            _arity(a, 3, "concept")
            out.add(ConceptAtom(parse_concept(a[1]), term(a[2])))
        elif h == "role":
            _arity(a, 4, "role")
            out.add(RoleAtom(parse_role(a[1]), term(a[2]), term(a[3])))
        elif h == "eq":
            _arity(a, 3, "eq")
            out.add(EqAtom(term(a[1]), term(a[2])))
        else:
            _err(a, f"unknown query atom {h}")
    q = Query(frozenset(out))
    unused = [n for n in sorted(names) if Var(n) not in q.vars]
    if unused:
        _err(x, f"declared variable does not occur: {unused[0]}")
    return q, answer


def parse_query_expr(x):
    if _head(x) == "ucq":
        if len(x) < 2:
            _err(x, "ucq needs at least one query")
        qs = []
        for d in x[1:]:
            q, answer = _query_expr(d)
            if answer:
                _err(d, "answer variables are not allowed inside ucq")
            qs.append(q)
        return UCQ(tuple(qs))
    q, answer = _query_expr(x)
    if answer is not None:
        return AnswerQuery(q, tuple(answer))
    return UCQ((q,))


def parse_query(text: str, file: str = "<input>"):
    """A UCQ, or an AnswerQuery when (answer-vars ...) is present."""
    return parse_query_expr(read_one(text, file))


# ----------------------------------------------------------- printing

def print_concept(c: Concept) -> str:
    return str(c)


def print_kb(kb: KB) -> str:
    return str(kb)


def print_query(q) -> str:
    return str(q)
