"""
Algebraic-law suite.

Every axiom schema is instantiated on random ground terms over a random
environment and both sides are compared by language equivalence of their
automata.  The language of each operator, congruence, unique solutions of
observationally guarded equations and the excision of ε-loops are checked
the same way.
"""
import random
from collections.abc import Callable
from itertools import product

import pytest

from sfm1.automata import Distinct, Equal, accepts, language_equiv
from sfm1.semantics import denote
from sfm1.terms import (
    EPS,
    ONE,
    ZERO,
    Const,
    Environment,
    Prefix,
    Sum,
    Term,
    og,
    parse_system,
    parse_term,
    substitute,
)

from tests.conftest import random_system, random_term

INSTANCES = 100
FOLDS = 50
WORDS = ["".join(w) for n in range(4) for w in product("ab", repeat=n)]

Instance = tuple[Term, Term, Environment]


def _equal(lhs: Term, rhs: Term, env: Environment) -> bool:
    return isinstance(language_equiv(denote(lhs, env), denote(rhs, env)), Equal)


def _language(t: Term, env: Environment) -> set[str]:
    n = denote(t, env)
    return {w for w in WORDS if all(s in n.alphabet for s in w) and accepts(n, w)}


def _terms(rng: random.Random, k: int) -> tuple[list[Term], Environment]:
    p = random_system(rng, constants=2)
    names = sorted(p.env)
    return [random_term(rng, names, depth=2) for _ in range(k)], p.env


def _fill(t: Term, name: str, env: Environment) -> Term:
    filled, _ = substitute(t, {"x": Const(name)}, env)
    return filled


# ---------------------------------------------------------------------------
# Axiom instances
# ---------------------------------------------------------------------------

def _a1(rng: random.Random) -> Instance:
    (x, y, z), env = _terms(rng, 3)
    return Sum(x, Sum(y, z)), Sum(Sum(x, y), z), env


def _a2(rng: random.Random) -> Instance:
    (x, y), env = _terms(rng, 2)
    return Sum(x, y), Sum(y, x), env


def _a3(rng: random.Random) -> Instance:
    (x,), env = _terms(rng, 1)
    return Sum(x, ZERO), x, env


def _a4(rng: random.Random) -> Instance:
    (x,), env = _terms(rng, 1)
    return Sum(x, x), x, env


def _t1(rng: random.Random) -> Instance:
    _, env = _terms(rng, 0)
    return Prefix(rng.choice("ab"), ZERO), ZERO, env


def _t2(rng: random.Random) -> Instance:
    (x, y), env = _terms(rng, 2)
    alpha = rng.choice(["a", "b", EPS])
    return Prefix(alpha, Sum(x, y)), Sum(Prefix(alpha, x), Prefix(alpha, y)), env


def _t3(rng: random.Random) -> Instance:
    (x,), env = _terms(rng, 1)
    return Prefix(EPS, x), x, env


def _r1(rng: random.Random) -> Instance:
    p = random_system(rng)
    name = rng.choice(sorted(p.env))
    return Const(name), p.env[name], p.env


def _r3(rng: random.Random) -> Instance:
    p = random_system(rng, constants=2)
    template = random_term(rng, sorted(p.env), depth=2, var="x")
    env = dict(p.env)
    env["L"] = Sum(Prefix(EPS, Const("L")), _fill(template, "L", p.env))
    env["M"] = _fill(template, "M", p.env)
    return Const("L"), Const("M"), env


LAWS: dict[str, Callable[[random.Random], Instance]] = {
    "A1": _a1,
    "A2": _a2,
    "A3": _a3,
    "A4": _a4,
    "T1": _t1,
    "T2": _t2,
    "T3": _t3,
    "R1": _r1,
    "R3": _r3,
}


@pytest.mark.parametrize("law", sorted(LAWS))
def test_axiom_instances_preserve_the_language(law: str):
    rng = random.Random(f"law-{law}")
    for _ in range(INSTANCES):
        lhs, rhs, env = LAWS[law](rng)
        assert _equal(lhs, rhs, env), f"{law}: {lhs} vs {rhs}"


# ---------------------------------------------------------------------------
# Folding
# ---------------------------------------------------------------------------

def test_folding_identifies_solutions_of_guarded_equations():
    rng = random.Random(53)
    folded = 0
    while folded < FOLDS:
        p = random_system(rng, constants=2)
        template = random_term(rng, sorted(p.env), depth=2, var="x")
        if not og(template, p.env):
            continue
        env = dict(p.env)
        env["L"] = _fill(template, "L", p.env)
        env["M"] = _fill(template, "M", p.env)
        q = env["M"]
        unfolded, _ = substitute(template, {"x": q}, env)
        assert _equal(q, unfolded, env)
        assert _equal(Const("L"), q, env)
        folded += 1


def test_unguarded_equation_has_many_solutions():
    env = parse_system("C := eps.C + a.1\n").env
    verdict = language_equiv(denote(Const("C"), env), denote(parse_term("a.1 + b.1"), env))
    assert isinstance(verdict, Distinct)
    assert verdict.word == "b"


# ---------------------------------------------------------------------------
# Languages of the operators
# ---------------------------------------------------------------------------

def test_languages_of_the_operators():
    rng = random.Random(59)
    assert _language(ZERO, {}) == set()
    assert _language(ONE, {}) == {""}
    for _ in range(INSTANCES):
        (p, q), env = _terms(rng, 2)
        lp, lq = _language(p, env), _language(q, env)
        for a in "ab":
            expected = {w for w in WORDS if w[:1] == a and w[1:] in lp}
            assert _language(Prefix(a, p), env) == expected
        assert _language(Prefix(EPS, p), env) == lp
        assert _language(Sum(p, q), env) == lp | lq


def test_language_equivalence_is_a_congruence():
    rng = random.Random(61)
    ground = [LAWS[name] for name in ("A1", "A2", "A3", "A4", "T1", "T2", "T3")]
    for _ in range(INSTANCES):
        lhs, rhs, env = rng.choice(ground)(rng)
        r = random_term(rng, sorted(env), depth=2)
        alpha = rng.choice(["a", "b", EPS])
        assert _equal(Prefix(alpha, lhs), Prefix(alpha, rhs), env)
        assert _equal(Sum(lhs, r), Sum(rhs, r), env)
