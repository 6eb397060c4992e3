"""
Compile a reduced NFA into a system of equations in normal form.

Each state ``q_i`` becomes a constant ``C<i>``, numbered breadth-first
from the initial state with successors visited by (label, target).  A
deadlocked state is ``0`` or ``1``; any other state is the sum of its
``label.C_k`` summands, ordered by label then target index, with ``+ 1``
appended when it is final.
"""
from __future__ import annotations

import logging
from collections import deque

from sfm1.automata import Nfa, is_reduced, isomorphic
from sfm1.exceptions import NotReduced
from sfm1.semantics import denote
from sfm1.terms import ONE, ZERO, Const, Prefix, Process, Term, sum_of

logger = logging.getLogger(__name__)


def _numbering(n: Nfa) -> dict[str, int]:
    index = {n.initial: 0}
    queue = deque([n.initial])
    while queue:
        for _, dst in sorted(n.out(queue.popleft())):
            if dst not in index:
                index[dst] = len(index)
                queue.append(dst)
    return index


def compile_with_names(n: Nfa, prefix: str = "C") -> tuple[Process, dict[str, str]]:
    """Like :func:`compile` but also returns the state-to-constant naming."""
    if not is_reduced(n):
        raise NotReduced("only reduced NFAs are representable")
    index = _numbering(n)
    names = {q: f"{prefix}{i}" for q, i in index.items()}
    env: dict[str, Term] = {}
    for q in sorted(index, key=index.__getitem__):
        moves = sorted(n.out(q), key=lambda move: (move[0], index[move[1]]))
        summands: list[Term] = [Prefix(a, Const(names[dst])) for a, dst in moves]
        if q in n.finals:
            summands.append(ONE)
        env[names[q]] = sum_of(summands) if summands else ZERO
    logger.debug("compiled %d states", len(env))
    return Process.of(Const(names[n.initial]), env), names


def compile(n: Nfa) -> Process:  # noqa: A001
    return compile_with_names(n)[0]


def roundtrip_iso(n: Nfa) -> dict[str, str]:
    """
    The bijection ``q_i -> C_i`` between *n* and the semantics of its
    compilation, verified against the isomorphism matcher.
    """
    process, names = compile_with_names(n)
    back = denote(process)
    if isomorphic(n, back) is None:
        raise AssertionError("compiled system is not isomorphic to its source")
    for src, label, dst in n.transitions:
        if (names[src], label, names[dst]) not in back.transitions:
            raise AssertionError(f"transition {(src, label, dst)} is not preserved")
    if {names[q] for q in n.finals} != set(back.finals):
        raise AssertionError("finality is not preserved")
    return names
