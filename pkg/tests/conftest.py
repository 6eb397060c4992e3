"""
Test infrastructure for the SFM1 toolkit.

Strategy
--------
- Golden systems and automata are the worked examples of the theory
  (the a*b* pair, the b.D example, the two-letter DFAs, the ε-free and
  subset-construction examples); fixtures build them from their text or
  transition lists so every test starts from a fresh immutable value.
- Property suites draw random guarded systems from ``random.Random`` with
  a fixed seed per test, so failures reproduce exactly and the suite
  never depends on hash order.
- Language equivalence of automata is the oracle for every proof: a
  proof must pass ``check_proof`` and its two endpoints must denote the
  same language in the proof's final environment.
- The fresh-name counter reads ``SFM1_SEED`` once per query; tests that
  assert generated names rely on the default seed of 1.
"""
import random

import pytest

from sfm1.automata import Nfa, language_equiv, Equal
from sfm1.proofs import Proof, check_proof
from sfm1.semantics import denote
from sfm1.terms import (
    EPS,
    ONE,
    ZERO,
    Const,
    Prefix,
    Process,
    Sum,
    Term,
    Var,
    parse_system,
    sum_of,
)

# ---------------------------------------------------------------------------
# Golden automata
# ---------------------------------------------------------------------------

ASTAR_BSTAR_NFA = Nfa.build(
    states=["q0", "q1"],
    transitions=[("q0", "a", "q0"), ("q0", EPS, "q1"), ("q1", "b", "q1")],
    finals=["q1"],
    initial="q0",
)

ASTAR_BSTAR_DFA = Nfa.build(
    states=["q2", "q3", "q4"],
    transitions=[
        ("q2", "a", "q2"),
        ("q2", "b", "q3"),
        ("q3", "b", "q3"),
        ("q3", "a", "q4"),
        ("q4", "a", "q4"),
        ("q4", "b", "q4"),
    ],
    finals=["q2", "q3"],
    initial="q2",
)

BSTAR_A = Nfa.build(
    states=["q5", "q6"],
    transitions=[("q5", "a", "q6"), ("q5", "b", "q5")],
    finals=["q6"],
    initial="q5",
)

BPLUS = Nfa.build(
    states=["q7", "q8", "q9"],
    transitions=[("q7", "a", "q8"), ("q7", "b", "q9"), ("q9", "a", "q8"), ("q9", "b", "q9")],
    finals=["q9"],
    initial="q7",
)


@pytest.fixture
def astar_bstar_nfa() -> Nfa:
    return ASTAR_BSTAR_NFA


@pytest.fixture
def astar_bstar_dfa() -> Nfa:
    return ASTAR_BSTAR_DFA


@pytest.fixture
def bstar_a() -> Nfa:
    return BSTAR_A


@pytest.fixture
def bplus() -> Nfa:
    return BPLUS


# ---------------------------------------------------------------------------
# Golden systems
# ---------------------------------------------------------------------------

BD_SYSTEM = "C := b.D\nD := a.(b.D + 1)\n"

EPS_CHAIN_SYSTEM = "C1 := a.C1 + eps.C2 + 1\nC2 := b.C2 + eps.C3\nC3 := a.C3 + 1\n"

SUBSET_SYSTEM = "C1 := a.C1 + a.C2 + a.C1\nC2 := a.C2 + 1\n"

EPS_LOOP_SYSTEM = "C := eps.C + a.1\n"


@pytest.fixture
def bd_system() -> Process:
    """C ≐ b.D, D ≐ a.(b.D + 1): three states C, D and b.D + 1."""
    return parse_system(BD_SYSTEM)


@pytest.fixture
def eps_chain() -> Process:
    return parse_system(EPS_CHAIN_SYSTEM)


@pytest.fixture
def subset_system() -> Process:
    return parse_system(SUBSET_SYSTEM)


@pytest.fixture
def eps_loop() -> Process:
    return parse_system(EPS_LOOP_SYSTEM)


# ---------------------------------------------------------------------------
# Random systems
# ---------------------------------------------------------------------------

def random_term(
    rng: random.Random,
    names: list[str],
    symbols: str = "ab",
    eps: bool = True,
    depth: int = 1,
    var: str | None = None,
) -> Term:
    """A random guarded term over the constants *names*, with ``$var`` only under prefixes."""
    labels = list(symbols) + ([EPS] if eps else [])

    def body(d: int) -> Term:
        return sum_of(summand(d) for _ in range(rng.randint(1, 3)))

    def summand(d: int) -> Term:
        r = rng.random()
        if r < 0.15:
            return ONE
        if r < 0.2:
            return ZERO
        return Prefix(rng.choice(labels), target(d))

    def target(d: int) -> Term:
        r = rng.random()
        if var is not None and r < 0.25:
            return Var(var)
        if d <= 0 or r < 0.6:
            return Const(rng.choice(names))
        return body(d - 1)

    return body(depth)


def random_system(
    rng: random.Random,
    constants: int = 3,
    symbols: str = "ab",
    eps: bool = True,
    depth: int = 1,
) -> Process:
    """A random closed guarded system over ``K0 .. K<n-1>`` rooted at ``K0``."""
    names = [f"K{i}" for i in range(constants)]
    env = {name: random_term(rng, names, symbols, eps, depth) for name in names}
    return Process.of(Const(names[0]), env).restricted()


def _positions(t: Term, path: tuple[str, ...] = ()) -> list[tuple[tuple[str, ...], Term]]:
    found = [(path, t)]
    if isinstance(t, Prefix):
        found += _positions(t.body, (*path, "body"))
    elif isinstance(t, Sum):
        found += _positions(t.left, (*path, "left")) + _positions(t.right, (*path, "right"))
    return found


def _replace(t: Term, path: tuple[str, ...], new: Term) -> Term:
    if not path:
        return new
    head, rest = path[0], path[1:]
    if head == "body":
        return Prefix(t.label, _replace(t.body, rest, new))
    if head == "left":
        return Sum(_replace(t.left, rest, new), t.right)
    return Sum(t.left, _replace(t.right, rest, new))


def rewrite_system(rng: random.Random, p: Process, steps: int) -> Process:
    """*p* after *steps* random language-preserving rewrites of its bodies."""
    env = dict(p.env)
    for _ in range(steps):
        name = rng.choice(sorted(env))
        path, t = rng.choice(_positions(env[name]))
        options: list[Term] = [Prefix(EPS, t)]
        if isinstance(t, Sum):
            options.append(Sum(t.right, t.left))
        if isinstance(t, Const):
            options.append(p.env[t.name])
        else:
            options += [Sum(t, ZERO), Sum(t, t)]
        env[name] = _replace(env[name], path, rng.choice(options))
    return Process.of(p.root, env)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240611)


# ---------------------------------------------------------------------------
# Proof oracle
# ---------------------------------------------------------------------------

def assert_sound(proof: Proof) -> None:
    """The proof checks and its endpoints denote the same language."""
    result = check_proof(proof)
    assert result, str(result)
    lhs, rhs = proof.conclusion
    verdict = language_equiv(denote(lhs, proof.env_n), denote(rhs, proof.env_n))
    assert isinstance(verdict, Equal), f"endpoints differ on {verdict}"
