"""
Command-line frontend.

Exit codes: 0 equal/valid, 1 distinct/invalid, 2 bad input or failed
precondition, 3 an emitted proof failed its self-check.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from sfm1 import __version__
from sfm1.automata import Distinct, Nfa, bisimilar, from_json, isomorphic, language_equiv, to_dot, to_json
from sfm1.compiler import compile as compile_nfa
from sfm1.config import settings
from sfm1.exceptions import SelfCheckFailure, Sfm1Error
from sfm1.proofs import (
    Proof,
    check_proof,
    merge_processes,
    prove_equivalence,
    to_deterministic,
    to_eps_free,
    to_normal_form,
    to_og,
)
from sfm1.semantics import denote
from sfm1.terms import Process, alphabet, parse_system, render, render_system

logger = logging.getLogger(__name__)

EXIT_EQUAL = 0
EXIT_DISTINCT = 1
EXIT_BAD_INPUT = 2
EXIT_SELF_CHECK = 3


# ---------------------------------------------------------------------------
# Input and output
# ---------------------------------------------------------------------------

def _kind(path: Path, forced: str | None) -> str:
    if forced:
        return forced
    return "nfa" if path.name.endswith(".json") else "terms"


def load_process(path: Path, forced: str | None = None) -> Process:
    """A terms file as parsed, or an automaton file compiled to equations."""
    text = path.read_text(encoding="utf-8")
    if _kind(path, forced) == "nfa":
        return compile_nfa(from_json(text))
    return parse_system(text)


def load_automaton(path: Path, forced: str | None = None) -> Nfa:
    text = path.read_text(encoding="utf-8")
    if _kind(path, forced) == "nfa":
        return from_json(text)
    return denote(parse_system(text))


def load_environment(paths: Sequence[Path], forced: str | None = None) -> Process:
    """
    The starting environment of a proof over *paths*: the single input as
    parsed, or the merge :func:`prove_equivalence` builds for two inputs.
    """
    processes = [load_process(p, forced) for p in paths]
    if len(processes) == 1:
        return processes[0]
    first, _ = merge_processes(processes[0], processes[1])
    return first


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
        logger.info("wrote %s", out)


def _self_check(proof: Proof, always: bool = False) -> None:
    if not (always or settings.SELF_CHECK):
        return
    result = check_proof(proof)
    if not result:
        raise SelfCheckFailure(result.step, result.reason)
    logger.debug("self-check passed: %d steps", len(proof))


def _symbols(raw: str | None) -> set[str]:
    return {s.strip() for s in raw.split(",") if s.strip()} if raw else set()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_semantics(args: argparse.Namespace) -> int:
    n = denote(load_process(args.input, args.kind))
    _emit(to_dot(n) if args.format == "dot" else to_json(n), args.out)
    return EXIT_EQUAL


def cmd_compile(args: argparse.Namespace) -> int:
    process = compile_nfa(load_automaton(args.input, args.kind))
    _emit(render_system(process), args.out)
    return EXIT_EQUAL


def cmd_equiv(args: argparse.Namespace) -> int:
    n1 = load_automaton(args.a, args.kind)
    n2 = load_automaton(args.b, args.kind)
    if args.relation == "lang":
        verdict = language_equiv(n1, n2)
        if isinstance(verdict, Distinct):
            print(f"DISTINCT {verdict.word}")
            return EXIT_DISTINCT
        print("EQUAL")
        return EXIT_EQUAL
    if args.relation == "bisim":
        same = bisimilar(n1, n2)
        print("EQUAL" if same else "DISTINCT")
        return EXIT_EQUAL if same else EXIT_DISTINCT
    mapping = isomorphic(n1, n2)
    if mapping is None:
        print("DISTINCT")
        return EXIT_DISTINCT
    print("ISO")
    for q in sorted(mapping):
        print(f"{q} -> {mapping[q]}")
    return EXIT_EQUAL


def cmd_prove(args: argparse.Namespace) -> int:
    p = load_process(args.a, args.kind)
    q = load_process(args.b, args.kind)
    verdict = prove_equivalence(p, q)
    if isinstance(verdict, Distinct):
        print(f"DISTINCT {verdict.word}")
        return EXIT_DISTINCT
    assert verdict.proof is not None
    _self_check(verdict.proof, always=True)
    _emit(verdict.proof.to_json(), args.out)
    lhs, rhs = verdict.proof.conclusion
    print(f"EQUAL {render(lhs)} = {render(rhs)} ({len(verdict.proof)} steps)", file=sys.stderr)
    return EXIT_EQUAL


def cmd_normalize(args: argparse.Namespace) -> int:
    p = load_process(args.input, args.kind)
    if args.stage == "nf":
        result, proof = to_normal_form(p, args.axiom_set)
    elif args.stage == "og":
        result, proof = to_og(p)
    elif args.stage == "epsfree":
        result, proof = to_eps_free(p)
    else:
        extra = _symbols(args.alphabet)
        used = alphabet(p.root, p.env)
        for symbol in sorted(extra - used):
            logger.warning("symbol %s does not occur in %s", symbol, args.input)
        result, proof = to_deterministic(p, sorted(used | extra))
    _self_check(proof)
    _emit(render_system(result), args.out)
    if args.proof is not None:
        args.proof.write_text(proof.to_json(), encoding="utf-8")
        logger.info("wrote %s", args.proof)
    return EXIT_EQUAL


def cmd_check_proof(args: argparse.Namespace) -> int:
    env = load_environment(args.env, args.kind).env
    proof = Proof.from_json(args.proof.read_text(encoding="utf-8"), env)
    result = check_proof(proof)
    print(result)
    return EXIT_EQUAL if result else EXIT_DISTINCT


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfm1", description="SFM1 processes and NFAs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="INFO with -v, DEBUG with -vv")
    parser.add_argument("--as", dest="kind", choices=["terms", "nfa"], default=None,
                        help="input kind (default: by extension, .json is an automaton)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("semantics", help="automaton of a process")
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=["json", "dot"], default="json")
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_semantics)

    p = sub.add_parser("compile", help="system of equations of an automaton")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_compile)

    p = sub.add_parser("equiv", help="compare two inputs")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--relation", choices=["lang", "bisim", "iso"], default="lang")
    p.set_defaults(handler=cmd_equiv)

    p = sub.add_parser("prove", help="prove two processes equal or show a witness")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--out", type=Path, help="proof file (default: stdout)")
    p.set_defaults(handler=cmd_prove)

    p = sub.add_parser("normalize", help="run one reduction stage")
    p.add_argument("input", type=Path)
    p.add_argument("--stage", choices=["nf", "og", "epsfree", "det"], required=True)
    p.add_argument("--alphabet", help="comma-separated symbols added to the input's alphabet (det)")
    p.add_argument("--axiom-set", choices=["B", "Wg"], default="B", help="axiom set of the nf stage")
    p.add_argument("--out", type=Path, help="resulting system (default: stdout)")
    p.add_argument("--proof", type=Path, help="where to write the proof trace")
    p.set_defaults(handler=cmd_normalize)

    p = sub.add_parser("check-proof", help="validate a proof trace")
    p.add_argument("proof", type=Path)
    p.add_argument("env", type=Path, nargs="+", help="one or two input files the proof starts from")
    p.set_defaults(handler=cmd_check_proof)
    return parser


def _log_level(verbose: int) -> int | str:
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return settings.LOG_LEVEL.upper()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=_log_level(args.verbose), format="%(levelname)s %(name)s: %(message)s")
    if args.command == "check-proof" and len(args.env) > 2:
        parser.error("check-proof takes one or two environment files")
    try:
        return args.handler(args)
    except SelfCheckFailure as exc:
        print(f"self-check failed: {exc}", file=sys.stderr)
        return EXIT_SELF_CHECK
    except (Sfm1Error, OSError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
