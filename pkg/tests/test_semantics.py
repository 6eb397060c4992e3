"""
Semantics tests: the automaton of a process, open terms and the
star/concatenation identity for recursive constants, plus the laws of
choice and prefixing checked through language equivalence.
"""
import random

import pytest

from sfm1.automata import Equal, accepts, bisimilar, is_reduced, isomorphic, language_equiv
from sfm1.exceptions import NotOpenOn
from sfm1.semantics import denote, open_languages, star_concat_identity_check
from sfm1.terms import (
    EPS,
    ONE,
    ZERO,
    Const,
    Prefix,
    Process,
    Sum,
    consts,
    is_og_system,
    parse_expression,
    parse_system,
)

from tests.conftest import random_system


def _equal(n1, n2) -> bool:
    return isinstance(language_equiv(n1, n2), Equal)


# ---------------------------------------------------------------------------
# denote
# ---------------------------------------------------------------------------

def test_denote_bd_example(bd_system: Process):
    n = denote(bd_system)
    assert n.states == {"C", "D", "b.D + 1"}
    assert n.transitions == {("C", "b", "D"), ("D", "a", "b.D + 1"), ("b.D + 1", "b", "D")}
    assert n.finals == {"b.D + 1"}
    assert n.initial == "C"
    assert n.alphabet == {"a", "b"}


def test_denote_zero():
    n = denote(ZERO)
    assert n.states == {"0"}
    assert n.transitions == frozenset()
    assert n.finals == frozenset()
    assert n.alphabet == frozenset()


def test_denote_drops_untargeted_operand_states():
    env = {"D": parse_expression("a.(b.D + 1)")}
    n = denote(parse_expression("b.D + 1"), env)
    assert "b.D" not in n.states and "1" not in n.states
    assert "b.D + 1" in n.finals


def test_denote_free_variable_is_deadlock():
    n = denote(parse_expression("a.$x"))
    assert n.states == {"a.$x", "$x"}
    assert n.finals == frozenset()


def test_unfolding_is_not_an_isomorphism():
    p = parse_system("C := a.a.C + 1\n")
    by_constant = denote(p)
    by_body = denote(p.env["C"], p.env)
    assert len(by_constant.states) == 2
    assert len(by_body.states) == 3
    assert _equal(by_constant, by_body)


def test_choice_is_not_an_isomorphism():
    env = parse_system("A := a.(b.B + a.A)\nB := b.B + 1\n").env
    p, q = Prefix("a", Const("A")), Prefix("b", Const("B"))
    left, right = denote(Sum(p, q), env), denote(Sum(q, p), env)
    assert len(left.states) == 4
    assert len(right.states) == 3
    assert isomorphic(left, right) is None
    assert _equal(left, right)


def test_denote_is_reduced_on_random_systems():
    rng = random.Random(5)
    for _ in range(40):
        assert is_reduced(denote(random_system(rng, constants=4)))


# ---------------------------------------------------------------------------
# Language laws
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "left, right",
    [
        ("a.1 + (b.1 + 1)", "(a.1 + b.1) + 1"),
        ("a.1 + b.1", "b.1 + a.1"),
        ("a.b.1 + 0", "a.b.1"),
        ("a.b.1 + a.b.1", "a.b.1"),
        ("a.0", "0"),
        ("a.(b.1 + c.1)", "a.b.1 + a.c.1"),
        ("eps.(a.1 + 1)", "a.1 + 1"),
    ],
)
def test_choice_and_prefix_laws(left: str, right: str):
    assert _equal(denote(parse_expression(left)), denote(parse_expression(right)))


def test_unfolding_and_excision_laws():
    p = parse_system("C := eps.C + a.1\nD := a.1\n")
    assert _equal(denote(Const("C"), p.env), denote(p.env["C"], p.env))
    assert _equal(denote(Const("C"), p.env), denote(Const("D"), p.env))


def test_epsilon_absorption_is_not_a_bisimulation():
    p = denote(parse_expression("eps.a.1"))
    q = denote(parse_expression("a.1"))
    assert _equal(p, q)
    assert not bisimilar(p, q)


# ---------------------------------------------------------------------------
# Open terms
# ---------------------------------------------------------------------------

def test_open_languages_example():
    down, to_x = open_languages(parse_expression("a.(b.1 + c.$x)"), "x", {})
    assert accepts(down, "ab") and not accepts(down, "ac")
    assert accepts(to_x, "ac") and not accepts(to_x, "ab")
    assert not accepts(down, "") and not accepts(to_x, "a")


def test_open_languages_requires_the_variable():
    with pytest.raises(NotOpenOn):
        open_languages(parse_expression("a.1"), "x", {})


def test_open_languages_epsilon_reaches_variable():
    _, to_x = open_languages(parse_expression("eps.$x + a.1"), "x", {})
    assert accepts(to_x, "")


@pytest.mark.parametrize(
    "system",
    ["C := a.(b.1 + c.C)\n", "C := 1\n", "C := eps.C + a.1\n", "C := a.C + b.(1 + a.C)\n"],
)
def test_star_concat_identity(system: str):
    p = parse_system(system)
    assert star_concat_identity_check("C", p.env)


def test_star_concat_identity_on_random_constants():
    rng = random.Random(9)
    checked = 0
    while checked < 50:
        p = random_system(rng, constants=1, depth=2)
        if not is_og_system(p.root, p.env) or "K0" not in consts(p.env["K0"], p.env):
            continue
        assert star_concat_identity_check("K0", p.env)
        checked += 1


def test_one_and_zero_languages():
    assert accepts(denote(ONE), "")
    assert not accepts(denote(Prefix(EPS, ZERO)), "")
