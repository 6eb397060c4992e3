"""
Denotational semantics: processes to reduced NFAs.

Design notes
------------
- The encoding is syntax driven and parametrised by the set *I* of
  constants already being unfolded.  States are terms; the resulting
  automaton names them by their rendered text, so two syntactically
  equal subterms share one state.
- In a choice ``p1 + p2`` an operand's initial state survives only if a
  transition of that operand's automaton reaches it; otherwise it and
  its outgoing transitions are dropped.  The same pruning applies to the
  body of an unfolded constant, whose initial transitions are re-sourced
  at the constant.
- Encodings are memoised on the term and on the part of *I* that the
  term can reach, which is all the encoding depends on.
- A free variable ``$x`` is a non-final deadlock state of its own.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from sfm1.automata import Equal, Nfa, language_equiv
from sfm1.exceptions import NotOpenOn
from sfm1.terms import (
    EPS,
    Const,
    Environment,
    One,
    Prefix,
    Process,
    Sum,
    Term,
    Var,
    Zero,
    consts,
    free_vars,
    lookup,
    render,
)

logger = logging.getLogger(__name__)

_Transition = tuple[Term, str, Term]


@dataclass(frozen=True)
class _Encoding:
    states: frozenset[Term]
    transitions: frozenset[_Transition]
    finals: frozenset[Term]
    initial: Term

    def targeted(self) -> bool:
        return any(dst == self.initial for _, _, dst in self.transitions)

    def outgoing(self) -> list[tuple[str, Term]]:
        return [(a, dst) for src, a, dst in self.transitions if src == self.initial]

    def pruned(self) -> tuple[frozenset[Term], frozenset[_Transition], frozenset[Term]]:
        """States, transitions and finals once an untargeted initial state is removed."""
        if self.targeted():
            return self.states, self.transitions, self.finals
        states = self.states - {self.initial}
        transitions = frozenset(t for t in self.transitions if t[0] != self.initial)
        return states, transitions, self.finals & states


def _leaf(t: Term, final: bool = False) -> _Encoding:
    return _Encoding(frozenset({t}), frozenset(), frozenset({t}) if final else frozenset(), t)


class _Encoder:
    def __init__(self, env: Environment) -> None:
        self.env = env
        self._memo: dict[tuple[Term, frozenset[str]], _Encoding] = {}
        self._consts: dict[Term, frozenset[str]] = {}

    def reachable(self, t: Term) -> frozenset[str]:
        found = self._consts.get(t)
        if found is None:
            found = frozenset(consts(t, self.env))
            self._consts[t] = found
        return found

    def encode(self, t: Term, seen: frozenset[str]) -> _Encoding:
        key = (t, seen & self.reachable(t))
        cached = self._memo.get(key)
        if cached is None:
            cached = self._encode(t, key[1])
            self._memo[key] = cached
        return cached

    def _encode(self, t: Term, seen: frozenset[str]) -> _Encoding:
        if isinstance(t, One):
            return _leaf(t, final=True)
        if isinstance(t, (Zero, Var)):
            return _leaf(t)
        if isinstance(t, Prefix):
            inner = self.encode(t.body, seen)
            return _Encoding(
                inner.states | {t},
                inner.transitions | {(t, t.label, t.body)},
                inner.finals,
                t,
            )
        if isinstance(t, Sum):
            return self._choice(t, self.encode(t.left, seen), self.encode(t.right, seen))
        if isinstance(t, Const):
            if t.name in seen:
                return _leaf(t)
            return self._unfold(t, self.encode(lookup(self.env, t.name), seen | {t.name}))
        raise TypeError(f"not a term: {t!r}")

    @staticmethod
    def _choice(t: Sum, e1: _Encoding, e2: _Encoding) -> _Encoding:
        states: set[Term] = {t}
        transitions: set[_Transition] = set()
        finals: set[Term] = set()
        for e in (e1, e2):
            q, tr, f = e.pruned()
            states |= q
            transitions |= tr
            finals |= f
            transitions |= {(t, a, dst) for a, dst in e.outgoing()}
        if e1.initial in e1.finals or e2.initial in e2.finals:
            finals.add(t)
        return _Encoding(frozenset(states), frozenset(transitions), frozenset(finals), t)

    @staticmethod
    def _unfold(c: Const, body: _Encoding) -> _Encoding:
        q, tr, f = body.pruned()
        transitions = set(tr) | {(c, a, dst) for a, dst in body.outgoing()}
        finals = set(f)
        if body.initial in body.finals:
            finals.add(c)
        return _Encoding(frozenset(q | {c}), frozenset(transitions), frozenset(finals), c)


def _to_nfa(e: _Encoding) -> Nfa:
    return Nfa.build(
        states=(render(q) for q in e.states),
        transitions=((render(s), a, render(d)) for s, a, d in e.transitions),
        finals=(render(q) for q in e.finals),
        initial=render(e.initial),
        alphabet={a for _, a, _ in e.transitions if a != EPS},
    )


def denote(p: Process | Term, env: Environment | None = None) -> Nfa:
    """The NFA of *p* (a process, or a term read in *env*)."""
    if isinstance(p, Process):
        term, env = p.root, p.env
    else:
        term, env = p, env or {}
    nfa = _to_nfa(_Encoder(env).encode(term, frozenset()))
    logger.debug("denote %s: %d states", render(term), len(nfa.states))
    return nfa


# ---------------------------------------------------------------------------
# Open terms
# ---------------------------------------------------------------------------

def _language_pair(p: Term, x: str, env: Environment) -> tuple[Nfa, Nfa]:
    n = denote(p, env)
    var_state = render(Var(x))
    down = Nfa(n.states, n.alphabet, n.transitions, n.finals - {var_state}, n.initial)
    to_x = Nfa(
        n.states,
        n.alphabet,
        n.transitions,
        frozenset({var_state}) & n.states,
        n.initial,
    )
    return down, to_x


def open_languages(p: Term, x: str, env: Environment) -> tuple[Nfa, Nfa]:
    """
    The pair (*down*, *to_x*) for a term open on ``$x``: words leading to
    a final state, and words leading to the variable.
    """
    if x not in free_vars(p, env):
        raise NotOpenOn(x)
    return _language_pair(p, x, env)


def _fresh_var(taken: set[str]) -> str:
    n = 0
    name = "x"
    while name in taken:
        n += 1
        name = f"x{n}"
    return name


def _abstract(t: Term, name: str, x: str) -> Term:
    if isinstance(t, Const) and t.name == name:
        return Var(x)
    if isinstance(t, Prefix):
        return Prefix(t.label, _abstract(t.body, name, x))
    if isinstance(t, Sum):
        return Sum(_abstract(t.left, name, x), _abstract(t.right, name, x))
    return t


def star_concat_identity_check(name: str, env: Environment) -> bool:
    """
    Check ``L(C) = (L_x)* . L_down`` for ``C := p{C/x}``.

    The template *p* is the body of *C* with its own occurrences of *C*
    abstracted into a variable; an automaton for the right-hand side is
    glued from the two open languages with ε-moves and compared with the
    automaton of *C*.
    """
    body = lookup(env, name)
    x = _fresh_var(free_vars(body, env))
    template = _abstract(body, name, x)
    down, to_x = _language_pair(template, x, env)

    loop, tail = to_x.renamed("x:"), down.renamed("d:")
    start = "start"
    glue = {(start, EPS, loop.initial), (start, EPS, tail.initial)}
    glue |= {(q, EPS, start) for q in loop.finals}
    glued = Nfa.build(
        states=loop.states | tail.states | {start},
        transitions=loop.transitions | tail.transitions | glue,
        finals=tail.finals,
        initial=start,
        alphabet=loop.alphabet | tail.alphabet,
    )
    verdict = language_equiv(glued, denote(Const(name), env))
    logger.debug("star/concat identity for %s: %s", name, verdict)
    return isinstance(verdict, Equal)
