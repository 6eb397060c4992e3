"""
Finite automata with ε-moves and the deciders run over them.

Design notes
------------
- States are strings.  The semantics names states by the rendered text
  of their terms, the determinizer by ``{m1,m2}`` lists of sorted member
  names, so every construction is deterministic and golden-testable.
- ``language_equiv`` decides with a Hopcroft-Karp union-find pass over
  the two subset automata and, only when they differ, runs a
  breadth-first product search for the shortest (then lexicographically
  least) distinguishing word.
- ``bisimilar`` refines the partition of the disjoint union, treating
  ``eps`` as an ordinary label.
- ``isomorphic`` delegates the backtracking search to networkx's VF2
  matcher, with finality/initiality as node attributes and label sets as
  edge attributes.
"""
from __future__ import annotations

import logging
from collections import defaultdict, deque
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import networkx as nx
from networkx.algorithms.isomorphism import DiGraphMatcher

from sfm1.config import settings
from sfm1.exceptions import ForeignSymbol, InvalidAutomaton, TooLarge, UnknownState
from sfm1.schemas import NfaDocument
from sfm1.terms import EPS

if TYPE_CHECKING:
    from sfm1.proofs.model import Proof

logger = logging.getLogger(__name__)

Transition = tuple[str, str, str]
Word = tuple[str, ...]


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Nfa:
    states: frozenset[str]
    alphabet: frozenset[str]
    transitions: frozenset[Transition]
    finals: frozenset[str]
    initial: str

    def __post_init__(self) -> None:
        if self.initial not in self.states:
            raise InvalidAutomaton(f"initial state {self.initial!r} is not a state")
        if EPS in self.alphabet:
            raise InvalidAutomaton("the alphabet cannot contain eps")
        stray = self.finals - self.states
        if stray:
            raise InvalidAutomaton(f"final states {sorted(stray)} are not states")
        for src, label, dst in self.transitions:
            if src not in self.states or dst not in self.states:
                raise InvalidAutomaton(f"transition {(src, label, dst)} leaves the state set")
            if label != EPS and label not in self.alphabet:
                raise InvalidAutomaton(f"label {label!r} is not in the alphabet")

    @classmethod
    def build(
        cls,
        states: Iterable[str],
        transitions: Iterable[Transition],
        finals: Iterable[str],
        initial: str,
        alphabet: Iterable[str] | None = None,
    ) -> "Nfa":
        """Convenience constructor; the alphabet defaults to the non-ε labels used."""
        transitions = frozenset(tuple(t) for t in transitions)  # type: ignore[misc]
        if alphabet is None:
            alphabet = {label for _, label, _ in transitions if label != EPS}
        return cls(
            states=frozenset(states),
            alphabet=frozenset(alphabet),
            transitions=transitions,  # type: ignore[arg-type]
            finals=frozenset(finals),
            initial=initial,
        )

    @cached_property
    def _out(self) -> dict[str, list[tuple[str, str]]]:
        out: dict[str, list[tuple[str, str]]] = defaultdict(list)
        for src, label, dst in sorted(self.transitions):
            out[src].append((label, dst))
        return out

    def out(self, q: str) -> list[tuple[str, str]]:
        """Outgoing ``(label, target)`` pairs of *q*, sorted."""
        return self._out.get(q, [])

    def step(self, states: Iterable[str], symbol: str) -> set[str]:
        return {dst for q in states for label, dst in self.out(q) if label == symbol}

    @property
    def has_eps(self) -> bool:
        return any(label == EPS for _, label, _ in self.transitions)

    def renamed(self, prefix: str) -> "Nfa":
        return Nfa(
            states=frozenset(prefix + q for q in self.states),
            alphabet=self.alphabet,
            transitions=frozenset((prefix + s, a, prefix + d) for s, a, d in self.transitions),
            finals=frozenset(prefix + q for q in self.finals),
            initial=prefix + self.initial,
        )


@dataclass(frozen=True)
class Dfa(Nfa):
    """An ε-free automaton with exactly one a-successor per state and symbol."""

    def __post_init__(self) -> None:
        super().__post_init__()
        seen: set[tuple[str, str]] = set()
        for src, label, _ in self.transitions:
            if label == EPS:
                raise InvalidAutomaton("a DFA has no eps transitions")
            if (src, label) in seen:
                raise InvalidAutomaton(f"state {src!r} has two {label!r}-transitions")
            seen.add((src, label))
        if len(seen) != len(self.states) * len(self.alphabet):
            raise InvalidAutomaton("a DFA needs a transition for every state and symbol")

    @cached_property
    def delta(self) -> dict[tuple[str, str], str]:
        return {(src, label): dst for src, label, dst in self.transitions}


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Equal:
    proof: "Proof | None" = None


@dataclass(frozen=True)
class Distinct:
    witness: Word

    @property
    def word(self) -> str:
        return format_word(self.witness)


EquivVerdict = Equal | Distinct


def format_word(word: Sequence[str]) -> str:
    if not word:
        return "ε"
    if all(len(symbol) == 1 for symbol in word):
        return "".join(word)
    return " ".join(word)


def _symbols(word: Sequence[str] | str) -> list[str]:
    if isinstance(word, str):
        return word.split() if " " in word else list(word)
    return list(word)


# ---------------------------------------------------------------------------
# Reachability and acceptance
# ---------------------------------------------------------------------------

def epsilon_closure(n: Nfa, states: Iterable[str]) -> frozenset[str]:
    closure = set(states)
    stack = list(closure)
    while stack:
        q = stack.pop()
        for label, dst in n.out(q):
            if label == EPS and dst not in closure:
                closure.add(dst)
                stack.append(dst)
    return frozenset(closure)


def reach(n: Nfa, q: str) -> set[str]:
    if q not in n.states:
        raise UnknownState(q)
    seen = {q}
    stack = [q]
    while stack:
        for _, dst in n.out(stack.pop()):
            if dst not in seen:
                seen.add(dst)
                stack.append(dst)
    return seen


def is_reduced(n: Nfa) -> bool:
    return reach(n, n.initial) == set(n.states)


def accepts(n: Nfa, word: Sequence[str] | str) -> bool:
    symbols = _symbols(word)
    for symbol in symbols:
        if symbol not in n.alphabet:
            raise ForeignSymbol(symbol)
    current = epsilon_closure(n, {n.initial})
    for symbol in symbols:
        current = epsilon_closure(n, n.step(current, symbol))
        if not current:
            return False
    return bool(current & n.finals)


# ---------------------------------------------------------------------------
# Subset construction
# ---------------------------------------------------------------------------

def subset_name(members: Iterable[str]) -> str:
    return "{" + ",".join(sorted(members)) + "}"


def determinize(n: Nfa, alphabet: Iterable[str] | None = None) -> Dfa:
    """
    Rabin-Scott subset construction over *alphabet* (default: the NFA's own).

    Only subsets reachable from the closed initial subset are built; the
    empty subset appears as a sink when some symbol leads nowhere.
    """
    symbols = sorted(n.alphabet if alphabet is None else set(alphabet))
    if EPS in symbols:
        raise InvalidAutomaton("cannot determinize over eps")
    missing = n.alphabet - set(symbols)
    if missing:
        raise InvalidAutomaton(f"alphabet lacks the symbols {sorted(missing)}")

    start = epsilon_closure(n, {n.initial})
    names = {start: subset_name(start)}
    transitions: set[Transition] = set()
    queue = deque([start])
    while queue:
        subset = queue.popleft()
        for a in symbols:
            target = epsilon_closure(n, n.step(subset, a))
            if target not in names:
                names[target] = subset_name(target)
                queue.append(target)
            transitions.add((names[subset], a, names[target]))
    logger.debug("determinized %d states into %d subsets", len(n.states), len(names))
    return Dfa(
        states=frozenset(names.values()),
        alphabet=frozenset(symbols),
        transitions=frozenset(transitions),
        finals=frozenset(name for subset, name in names.items() if subset & n.finals),
        initial=names[start],
    )


# ---------------------------------------------------------------------------
# Language equivalence
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[Any, Any] = {}

    def find(self, x: Any) -> Any:
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while x != root:
            self.parent[x], x = root, self.parent.get(x, x)
        return root

    def union(self, x: Any, y: Any) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        self.parent[rx] = ry
        return True


def _hopcroft_karp(d1: Dfa, d2: Dfa) -> bool:
    uf = _UnionFind()
    left, right = ("1", d1.initial), ("2", d2.initial)
    uf.union(left, right)
    stack = [(d1.initial, d2.initial)]
    while stack:
        p, q = stack.pop()
        if (p in d1.finals) != (q in d2.finals):
            return False
        for a in sorted(d1.alphabet):
            p2, q2 = d1.delta[p, a], d2.delta[q, a]
            if uf.union(("1", p2), ("2", q2)):
                stack.append((p2, q2))
    return True


def _shortest_witness(d1: Dfa, d2: Dfa) -> Word | None:
    start = (d1.initial, d2.initial)
    parent: dict[tuple[str, str], tuple[tuple[str, str], str] | None] = {start: None}
    queue = deque([start])
    symbols = sorted(d1.alphabet)
    while queue:
        pair = queue.popleft()
        p, q = pair
        if (p in d1.finals) != (q in d2.finals):
            word: list[str] = []
            node = pair
            while parent[node] is not None:
                node, a = parent[node]  # type: ignore[misc]
                word.append(a)
            return tuple(reversed(word))
        for a in symbols:
            nxt = (d1.delta[p, a], d2.delta[q, a])
            if nxt not in parent:
                parent[nxt] = (pair, a)
                queue.append(nxt)
    return None


def language_equiv(n1: Nfa, n2: Nfa) -> EquivVerdict:
    symbols = n1.alphabet | n2.alphabet
    d1, d2 = determinize(n1, symbols), determinize(n2, symbols)
    if _hopcroft_karp(d1, d2):
        return Equal()
    witness = _shortest_witness(d1, d2)
    if witness is None:
        raise AssertionError("union-find and product search disagree")
    logger.info("languages differ on %s", format_word(witness))
    return Distinct(witness)


# ---------------------------------------------------------------------------
# Bisimulation
# ---------------------------------------------------------------------------

def _coarsest_partition(n: Nfa) -> dict[str, int]:
    block = {q: int(q in n.finals) for q in n.states}
    count = len(set(block.values()))
    while True:
        signatures = {
            q: (block[q], frozenset((label, block[dst]) for label, dst in n.out(q)))
            for q in n.states
        }
        ids: dict[Any, int] = {}
        for q in sorted(n.states):
            ids.setdefault(signatures[q], len(ids))
        block = {q: ids[signatures[q]] for q in n.states}
        if len(ids) == count:
            return block
        count = len(ids)


def bisimilar(n1: Nfa, n2: Nfa) -> bool:
    a, b = n1.renamed("1:"), n2.renamed("2:")
    union = Nfa(
        states=a.states | b.states,
        alphabet=a.alphabet | b.alphabet,
        transitions=a.transitions | b.transitions,
        finals=a.finals | b.finals,
        initial=a.initial,
    )
    block = _coarsest_partition(union)
    return block[a.initial] == block[b.initial]


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------

def _graph(n: Nfa) -> nx.DiGraph:
    g = nx.DiGraph()
    for q in n.states:
        g.add_node(q, final=q in n.finals, initial=q == n.initial)
    labels: dict[tuple[str, str], set[str]] = defaultdict(set)
    for src, label, dst in n.transitions:
        labels[src, dst].add(label)
    for (src, dst), found in labels.items():
        g.add_edge(src, dst, labels=frozenset(found))
    return g


def isomorphic(n1: Nfa, n2: Nfa) -> dict[str, str] | None:
    """
    An initial-anchored bijection of *n1*'s states onto *n2*'s that
    preserves finality and labelled transitions, or ``None``.
    """
    limit = settings.ISO_NODE_LIMIT
    if max(len(n1.states), len(n2.states)) > limit:
        raise TooLarge(f"isomorphism search is limited to {limit} states")
    if (len(n1.states), len(n1.transitions), len(n1.finals)) != (
        len(n2.states),
        len(n2.transitions),
        len(n2.finals),
    ):
        return None
    matcher = DiGraphMatcher(
        _graph(n1),
        _graph(n2),
        node_match=lambda x, y: x["final"] == y["final"] and x["initial"] == y["initial"],
        edge_match=lambda x, y: x["labels"] == y["labels"],
    )
    if not matcher.is_isomorphic():
        return None
    return dict(matcher.mapping)


# ---------------------------------------------------------------------------
# JSON and DOT
# ---------------------------------------------------------------------------

def to_document(n: Nfa) -> NfaDocument:
    return NfaDocument(
        states=sorted(n.states),
        alphabet=sorted(n.alphabet),
        initial=n.initial,
        finals=sorted(n.finals),
        transitions=sorted(n.transitions),
    )


def from_document(doc: NfaDocument) -> Nfa:
    return Nfa.build(
        states=doc.states,
        transitions=doc.transitions,
        finals=doc.finals,
        initial=doc.initial,
        alphabet=doc.alphabet,
    )


def to_json(n: Nfa) -> str:
    return to_document(n).model_dump_json(indent=2) + "\n"


def from_json(text: str) -> Nfa:
    return from_document(NfaDocument.model_validate_json(text))


def _gvquote(s: str) -> str:
    return '"{}"'.format(s.replace("\\", "\\\\").replace('"', r"\""))


def _dot_lines(n: Nfa) -> Iterator[str]:
    yield "digraph nfa {\n"
    yield "  rankdir=LR;\n"
    yield '  "__start" [shape=none, label="", width=0, height=0];\n'
    for q in sorted(n.states):
        shape = "doublecircle" if q in n.finals else "circle"
        yield f"  {_gvquote(q)} [shape={shape}];\n"
    yield f'  "__start" -> {_gvquote(n.initial)};\n'
    for src, label, dst in sorted(n.transitions):
        text = "ε" if label == EPS else label
        yield f"  {_gvquote(src)} -> {_gvquote(dst)} [label={_gvquote(text)}];\n"
    yield "}\n"


def to_dot(n: Nfa) -> str:
    return "".join(_dot_lines(n))
