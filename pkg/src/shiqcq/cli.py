"""Command line front end.

Exit codes: 0 positive verdict, 1 negative verdict, 2 usage or input error,
3 a resource limit was hit.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .entail import Options, answer, consistent, entails, extended_tbox, rewrite_parts, spoiler
from .errors import ResourceLimit
from .kb import KB, SemanticError
from .query import UCQ, AnswerQuery, Query, term_key
from .rewrite import DEFAULT_BUDGET, Candidate, stage_candidates
from .rollup import groundings_of, trees_of
from .sexpr import ParseError
from .syntax import parse_kb, parse_query
from .tableau import Limits
from .translate import ExtendedKB, tr_kb

STAGES = ("collapse", "split", "loop", "forest", "ground", "tree")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e


class UsageError(Exception):
    pass


def _kb(args) -> KB:
    if not args.kb:
        raise UsageError("--kb is required")
    return parse_kb(_read(args.kb), args.kb)


def _query(args):
    if not args.query:
        raise UsageError("--query is required")
    return parse_query(_read(args.query), args.query)


def _options(args) -> Options:
    limits = Limits(max_nodes=args.max_nodes, seconds=args.timeout)
    return Options(budget=args.budget, tableau=limits, prune=not args.no_prune,
                   jobs=args.jobs, trace_dir=args.trace)


def _single(u) -> Query:
    if isinstance(u, AnswerQuery):
        if u.answer_vars:
            raise UsageError("rewriting needs a Boolean query")
        return u.query
    if len(u.disjuncts) != 1:
        raise UsageError("rewriting takes a single conjunctive query")
    return u.disjuncts[0]


def cmd_consistent(args, out) -> int:
    ok = consistent(_kb(args), _options(args))
    print("CONSISTENT" if ok else "INCONSISTENT", file=out)
    return 0 if ok else 1


def cmd_entails(args, out) -> int:
    kb, u = _kb(args), _query(args)
    if isinstance(u, AnswerQuery):
        if u.answer_vars:
            raise UsageError("entails needs a Boolean query; use answer")
        u = UCQ((u.query,))
    ok = entails(kb, u, args.una, _options(args))
    print("ENTAILED" if ok else "NOT-ENTAILED", file=out)
    return 0 if ok else 1


def cmd_answer(args, out) -> int:
    kb, aq = _kb(args), _query(args)
    if isinstance(aq, UCQ):
        if len(aq.disjuncts) != 1:
            raise UsageError("answer takes a single conjunctive query")
        aq = AnswerQuery(aq.disjuncts[0], ())
    rows = answer(kb, aq, args.una, _options(args))
    if not aq.answer_vars:
        print("ENTAILED" if rows else "NOT-ENTAILED", file=out)
    else:
        for row in rows:
            print(" ".join(row), file=out)
    return 0 if rows else 1


def cmd_rewrite(args, out) -> int:
    kb, q = _kb(args), _single(_query(args))
    if args.stage in ("ground", "tree"):
        cands = stage_candidates(q, kb, "forest", args.budget)
        if args.stage == "tree":
            items = trees_of(q, kb, args.budget, cands)
        else:
            items = groundings_of(q, kb, args.budget, cands)
        if not args.no_prune and args.prune_output:
            T, G = rewrite_parts(kb, UCQ((q,)), _options(args))
            items = T if args.stage == "tree" else G
        for it in items:
            print(it, file=out)
        return 0
    for c in stage_candidates(q, kb, args.stage, args.budget):
        print(c, file=out)
        print(file=out)
    return 0


def cmd_translate(args, out) -> int:
    kb = _kb(args)
    if args.query:
        u = _query(args)
        if isinstance(u, AnswerQuery):
            u = UCQ((u.query,))
        T, G = rewrite_parts(kb, u, _options(args))
        clauses = tuple(tuple((spoiler(a),) for a in sorted(g.atoms)) for g in G)
        print(tr_kb(ExtendedKB(kb, frozenset(extended_tbox(T)), frozenset(), clauses)), file=out)
    else:
        print(tr_kb(kb), file=out)
    return 0


def candidate_dot(c: Candidate, name: str) -> str:
    """Graph of a candidate: one node per equality class, one edge per role atom."""
    q = c.query
    ids = {cl: f"n{i}" for i, cl in enumerate(q.classes)}
    lines = [f"digraph {name} {{"]
    for cl, nid in ids.items():
        terms = ", ".join(str(t) for t in sorted(cl, key=term_key))
        labels = sorted(str(a.concept) for a in q.concept_atoms if a.term in cl)
        text = terms + "".join("\\n" + s for s in labels)
        shape = "doublecircle" if cl <= c.roots else "circle"
        lines.append(f'  {nid} [label="{text}", shape={shape}];')
    for a in sorted(q.role_atoms):
        lines.append(f'  {ids[q.cls[a.t1]]} -> {ids[q.cls[a.t2]]} [label="{a.role}"];')
    lines.append("}")
    return "\n".join(lines)


def cmd_dot(args, out) -> int:
    kb, q = _kb(args), _single(_query(args))
    stage = args.stage if args.stage in STAGES[:4] else "forest"
    for i, c in enumerate(stage_candidates(q, kb, stage, args.budget)):
        print(candidate_dot(c, f"c{i}"), file=out)
    return 0


COMMANDS = {
    "consistent": cmd_consistent,
    "entails": cmd_entails,
    "answer": cmd_answer,
    "rewrite": cmd_rewrite,
    "translate": cmd_translate,
    "dot": cmd_dot,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shiqcq", description="Conjunctive query entailment over SHIQ knowledge bases.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--kb", help="knowledge base file")
    p.add_argument("--query", help="query file")
    p.add_argument("--una", action="store_true", help="unique name assumption")
    p.add_argument("--stage", choices=STAGES, default="forest", help="rewriting stage to print")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for ABox partitions")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max rewriting candidates")
    p.add_argument("--max-nodes", type=int, default=Limits.max_nodes, help="tableau node budget")
    p.add_argument("--timeout", type=float, default=None, help="seconds per tableau run")
    p.add_argument("--trace", metavar="DIR", help="write tableau rule logs to DIR")
    p.add_argument("--no-prune", action="store_true", help="keep redundant rewritings")
    p.add_argument("--prune-output", action="store_true",
                   help="rewrite: print the pruned tree/ground queries actually used")
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.jobs < 1 or args.budget < 1:
        print("error: --jobs and --budget must be positive", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args, out)
    except (ParseError, SemanticError, UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ResourceLimit as e:
        print("RESOURCE-LIMIT", file=out)
        print(f"resource limit: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
