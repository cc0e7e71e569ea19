"""S-expression reader that remembers where every token came from."""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class Atom(str):
    """A symbol or number token with its position."""

    span: Span

    def __new__(cls, text: str, span: Span):
        s = super().__new__(cls, text)
        s.span = span
        return s


class SList(list):
    span: Span

    def __init__(self, items, span: Span):
        super().__init__(items)
        self.span = span


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def read_all(text: str, file: str = "<input>") -> list:
    """All top-level expressions in text."""
    stack: list = [SList([], Span(file, 1, 1))]
    line, col0 = 1, 0
    for m in _TOKEN.finditer(text):
        tok = m.group()
        span = Span(file, line, m.start() - col0 + 1)
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                col0 = m.start() + tok.rindex("\n") + 1
            continue
        if tok == "(":
            stack.append(SList([], span))
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unexpected ')'", span)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(Atom(tok, span))
    if len(stack) > 1:
        raise ParseError("unclosed '('", stack[-1].span)
    return list(stack[0])


def read_one(text: str, file: str = "<input>"):
    exprs = read_all(text, file)
    if len(exprs) != 1:
        span = exprs[1].span if len(exprs) > 1 else Span(file, 1, 1)
        raise ParseError(f"expected exactly one expression, found {len(exprs)}", span)
    return exprs[0]
