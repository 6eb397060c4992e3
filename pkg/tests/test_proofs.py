"""
Proof procedure tests: unfolding, the normal-form stages, unique
solutions, equality of deterministic forms and the complete prover.

Every proof produced here goes through ``assert_sound``: it must pass the
independent checker and its endpoints must denote the same language.
Golden systems pin the generated names for the default fresh-name seed.
"""
import logging
import random

import pytest

from sfm1.automata import Distinct, Equal, accepts, determinize, language_equiv
from sfm1.compiler import compile
from sfm1.exceptions import (
    NotASolution,
    NotClosed,
    NotDeterministic,
    NotEpsFree,
    NotEquivalent,
    NotNf,
    NotOg,
    PreconditionError,
    UndefinedConstant,
)
from sfm1.proofs import (
    AxiomId,
    AxiomSet,
    check_proof,
    prove_det_equal,
    prove_equivalence,
    prove_unfold,
    to_deterministic,
    to_eps_free,
    to_normal_form,
    to_og,
    unique_solution,
)
from sfm1.proofs.model import AXIOMS
from sfm1.semantics import denote
from sfm1.terms import (
    EPS,
    ZERO,
    Const,
    Prefix,
    Process,
    Sum,
    is_og_system,
    nf,
    og,
    parse_expression,
    parse_system,
    parse_term,
    render_system,
    summands,
)

from tests.conftest import assert_sound, random_system, rewrite_system


def _same_language(p: Process, q: Process) -> bool:
    return isinstance(language_equiv(denote(p), denote(q)), Equal)


def _uses_eps(p: Process) -> bool:
    return any(label == EPS for _, label, _ in denote(p).transitions)


def _within_axiom_set(proof) -> bool:
    return proof.axioms_used <= AXIOMS[proof.axiom_set]


def _accepts(n, word) -> bool:
    return all(s in n.alphabet for s in word) and accepts(n, word)


# ---------------------------------------------------------------------------
# Unfolding
# ---------------------------------------------------------------------------

def test_prove_unfold(bd_system: Process):
    proof = prove_unfold("C", bd_system.env)
    assert len(proof) == 1
    assert proof.conclusion == (Const("C"), parse_expression("b.D"))
    assert proof.steps[0].axiom is AxiomId.R1
    assert_sound(proof)


def test_prove_unfold_zero_body():
    proof = prove_unfold("C", {"C": ZERO})
    assert proof.conclusion == (Const("C"), ZERO)
    assert check_proof(proof)


def test_prove_unfold_undefined():
    with pytest.raises(UndefinedConstant):
        prove_unfold("C", {})


def test_prove_unfold_random_constants():
    rng = random.Random(21)
    checked = 0
    while checked < 100:
        p = random_system(rng, constants=3)
        for name in p.env:
            assert check_proof(prove_unfold(name, p.env))
            checked += 1


# ---------------------------------------------------------------------------
# Normal form
# ---------------------------------------------------------------------------

def test_normal_form_of_nested_prefixes():
    p = Process.of(parse_term("a.b.1"), {})
    result, proof = to_normal_form(p)
    assert render_system(result) == "D%2 := a.D%3\nD%3 := b.D%4\nD%4 := 1\n"
    assert proof.conclusion == (parse_term("a.b.1"), Const("D%2"))
    assert proof.axiom_set is AxiomSet.B
    assert_sound(proof)


def test_normal_form_of_normal_input_is_unchanged():
    p = parse_system("C := a.C + 1\n")
    result, proof = to_normal_form(p)
    assert render_system(result) == render_system(p)
    assert len(proof) == 1
    assert proof.conclusion == (Const("C"), Const("C"))


def test_normal_form_introduces_constant_for_inner_prefix():
    p = parse_system("C := a.b.C + 1\n")
    result, proof = to_normal_form(p)
    assert len(result.env) == 2
    assert nf(result.root, result.env)
    assert_sound(proof)


def test_normal_form_in_wg_keeps_guardedness():
    p = parse_system("C := a.(eps.C + b.1) + eps.b.C\n")
    result, proof = to_normal_form(p, "Wg")
    assert proof.axiom_set is AxiomSet.WG
    assert nf(result.root, result.env) and og(result.root, result.env)
    assert AxiomId.R2P not in proof.axioms_used
    assert_sound(proof)


def test_normal_form_in_wg_rejects_epsilon_cycle(eps_loop: Process):
    with pytest.raises(NotOg):
        to_normal_form(eps_loop, "Wg")


def test_normal_form_in_b_accepts_epsilon_cycle(eps_loop: Process):
    result, proof = to_normal_form(eps_loop)
    assert nf(result.root, result.env)
    assert _within_axiom_set(proof)
    assert_sound(proof)


def test_normal_form_rejects_w():
    with pytest.raises(ValueError):
        to_normal_form(parse_system("C := a.C\n"), "W")


def test_normal_form_random_systems():
    rng = random.Random(23)
    for _ in range(100):
        p = random_system(rng, depth=2)
        result, proof = to_normal_form(p)
        assert nf(result.root, result.env)
        assert _within_axiom_set(proof)
        assert_sound(proof)


# ---------------------------------------------------------------------------
# Unique solutions
# ---------------------------------------------------------------------------

def test_unique_solution_single_equation():
    env = parse_system("C := a.C\nD := a.D + a.D\n").env
    proof = unique_solution([parse_expression("a.$x")], ["x"], ["C"], [Const("D")], env)
    assert proof.conclusion == (Const("C"), Const("D"))
    assert AxiomId.R2 in proof.axioms_used
    assert_sound(proof)


def test_unique_solution_trivial_solution_needs_no_folding():
    env = parse_system("C := a.C + 1\n").env
    proof = unique_solution([parse_expression("a.$x + 1")], ["x"], ["C"], [Const("C")], env)
    assert proof.conclusion == (Const("C"), Const("C"))
    assert proof.axioms_used <= {AxiomId.R1}
    assert check_proof(proof)


def test_unique_solution_two_equations():
    env = parse_system(
        "C1 := a.C1 + b.C2\nC2 := a.C2 + 1\nD1 := b.D2 + a.D1\nD2 := 1 + a.D2\n"
    ).env
    templates = [parse_expression("a.$x1 + b.$x2"), parse_expression("a.$x2 + 1")]
    proof = unique_solution(templates, ["x1", "x2"], ["C1", "C2"], [Const("D1"), Const("D2")], env)
    last = proof.steps[-2:]
    assert [(s.lhs, s.rhs) for s in last] == [(Const("C1"), Const("D1")), (Const("C2"), Const("D2"))]
    assert_sound(proof)


def test_unique_solution_replays_given_proof():
    env = parse_system("C := a.C\nD := a.D\n").env
    given = prove_unfold("D", env)
    proof = unique_solution([parse_expression("a.$x")], ["x"], ["C"], [Const("D")], env, given)
    assert proof.steps[0].lhs == Const("D") and proof.steps[0].axiom is AxiomId.R1
    assert_sound(proof)


def test_unique_solution_rejects_non_solution():
    env = parse_system("C := a.C\nE := b.E\n").env
    with pytest.raises(NotASolution):
        unique_solution([parse_expression("a.$x")], ["x"], ["C"], [Const("E")], env)


def test_unique_solution_rejects_unguarded_system(eps_loop: Process):
    env = {**eps_loop.env, "D": parse_expression("eps.D + a.1")}
    with pytest.raises(NotOg):
        unique_solution([parse_expression("eps.$x + a.1")], ["x"], ["C"], [Const("D")], env)


def test_unique_solution_in_b_folds_without_guardedness(eps_loop: Process):
    env = {**eps_loop.env, "D": parse_expression("eps.D + a.1")}
    proof = unique_solution(
        [parse_expression("eps.$x + a.1")], ["x"], ["C"], [Const("D")], env, axiom_set=AxiomSet.B
    )
    assert AxiomId.R2P in proof.axioms_used
    assert check_proof(proof)


def test_unique_solution_length_mismatch():
    with pytest.raises(ValueError):
        unique_solution([parse_expression("a.$x")], ["x", "y"], ["C"], [Const("C")], {"C": parse_expression("a.C")})


# ---------------------------------------------------------------------------
# ε-free normal form
# ---------------------------------------------------------------------------

def test_eps_free_chain_example(eps_chain: Process):
    result, proof = to_eps_free(eps_chain)
    assert render_system(result) == (
        "D%1 := a.D%1 + b.D%2 + a.D%3 + 1\n"
        "D%2 := b.D%2 + a.D%3 + 1\n"
        "D%3 := a.D%3 + 1\n"
    )
    assert proof.conclusion == (Const("C1"), Const("D%1"))
    assert proof.axiom_set is AxiomSet.WG
    assert _within_axiom_set(proof)
    assert_sound(proof)


def test_eps_free_input_is_unchanged(bplus):
    p = compile(bplus)
    result, proof = to_eps_free(p)
    assert render_system(result) == render_system(p)
    assert len(proof) == 1


def test_eps_free_of_compiled_automaton(astar_bstar_nfa):
    p = compile(astar_bstar_nfa)
    result, proof = to_eps_free(p)
    assert not _uses_eps(result)
    assert _same_language(p, result)
    assert_sound(proof)


def test_eps_free_preconditions():
    with pytest.raises(NotNf):
        to_eps_free(parse_system("C := a.C + eps.b.1\n"))
    with pytest.raises(NotOg):
        to_eps_free(parse_system("C := eps.C + a.D\nD := 1\n"))


# ---------------------------------------------------------------------------
# Deterministic normal form
# ---------------------------------------------------------------------------

def test_deterministic_subset_example(subset_system: Process):
    result, proof = to_deterministic(subset_system, "ab")
    assert render_system(result) == (
        "D{1} := a.D{1,2} + b.D{}\n"
        "D{1,2} := a.D{1,2} + b.D{} + 1\n"
        "D{} := a.D{} + b.D{}\n"
    )
    assert proof.conclusion == (Const("C1"), Const("D{1}"))
    assert_sound(proof)


def test_deterministic_of_one_has_a_sink():
    result, proof = to_deterministic(parse_system("C := 1\n"), "a")
    assert render_system(result) == "D{1} := a.D{} + 1\nD{} := a.D{}\n"
    assert_sound(proof)


def test_deterministic_of_zero_is_a_sink():
    result, proof = to_deterministic(parse_system("C := 0\n"), "a")
    assert render_system(result) == "D{} := a.D{}\n"
    assert proof.conclusion == (Const("C"), Const("D{}"))
    assert not denote(result).finals
    assert_sound(proof)


def test_deterministic_merges_empty_targets_into_the_sink():
    p = parse_system("C := a.E + b.F\nE := 0 + 0\nF := 1\n")
    result, proof = to_deterministic(p, "ab")
    assert render_system(result) == (
        "D{1} := a.D{} + b.D{3}\n"
        "D{} := a.D{} + b.D{}\n"
        "D{3} := a.D{} + b.D{} + 1\n"
    )
    assert _same_language(p, result)
    assert_sound(proof)


def test_deterministic_moves_once_per_symbol(astar_bstar_dfa):
    p = compile(astar_bstar_dfa)
    result, proof = to_deterministic(p, "abc")
    for body in result.env.values():
        labels = [s.label for s in summands(body) if isinstance(s, Prefix)]
        assert labels == ["a", "b", "c"]
    assert_sound(proof)


def test_deterministic_preconditions(eps_chain: Process, subset_system: Process):
    with pytest.raises(NotEpsFree):
        to_deterministic(eps_chain, "ab")
    with pytest.raises(NotNf):
        to_deterministic(parse_system("C := a.b.C\n"), "ab")
    with pytest.raises(PreconditionError):
        to_deterministic(subset_system, "b")


# ---------------------------------------------------------------------------
# Equality of deterministic forms
# ---------------------------------------------------------------------------

ENDS_IN_A = "A := a.B + b.A\nB := a.B + b.A + 1\n"
ENDS_IN_A_UNMINIMISED = "X := a.Y + b.X\nY := a.Z + b.X + 1\nZ := a.Z + b.X + 1\n"


def test_prove_det_equal():
    proof = prove_det_equal(parse_system(ENDS_IN_A), parse_system(ENDS_IN_A_UNMINIMISED))
    assert proof.conclusion == (Const("A"), Const("X"))
    assert_sound(proof)


def test_prove_det_equal_same_root():
    p = parse_system(ENDS_IN_A)
    proof = prove_det_equal(p, p)
    assert proof.conclusion == (Const("A"), Const("A"))
    assert check_proof(proof)


def test_prove_det_equal_rejects_different_languages():
    with pytest.raises(NotEquivalent):
        prove_det_equal(parse_system(ENDS_IN_A), parse_system("X := a.X + b.X + 1\n"))


def test_prove_det_equal_rejects_nondeterministic_forms():
    with pytest.raises(NotDeterministic):
        prove_det_equal(parse_system("A := a.A + a.B\nB := 1\n"), parse_system("X := a.X\n"), "a")


# ---------------------------------------------------------------------------
# Observationally guarded form
# ---------------------------------------------------------------------------

def test_og_form_of_epsilon_loop(eps_loop: Process):
    result, proof = to_og(eps_loop)
    assert is_og_system(result.root, result.env)
    assert nf(result.root, result.env)
    assert not _uses_eps(result)
    assert AxiomId.R3 in proof.axioms_used
    assert_sound(proof)


def test_og_form_of_mutual_epsilon_cycle():
    p = parse_system("C1 := a.C2 + eps.C2\nC2 := b.C1 + eps.C1 + 1\n")
    result, proof = to_og(p)
    assert is_og_system(result.root, result.env)
    assert _same_language(p, result)
    assert_sound(proof)


def test_og_form_of_guarded_input_is_unchanged(eps_chain: Process):
    result, proof = to_og(eps_chain)
    assert render_system(result) == render_system(eps_chain)
    assert len(proof) == 1


def test_og_form_rejects_open_process():
    with pytest.raises(NotClosed):
        to_og(Process.of(parse_expression("eps.$x + a.1"), {}))


def test_og_form_random_systems():
    rng = random.Random(29)
    for _ in range(50):
        p = random_system(rng)
        result, proof = to_og(p)
        assert is_og_system(result.root, result.env)
        assert_sound(proof)


def test_og_form_measure_decreases(caplog):
    caplog.set_level(logging.DEBUG, logger="sfm1.proofs.guarding")
    rng = random.Random(47)
    for _ in range(50):
        p = random_system(rng)
        looped = Process.of(p.root, {n: Sum(Prefix(EPS, Const(n)), body) for n, body in p.env.items()})
        to_og(looped)
    measures = [r.args[2:] for r in caplog.records if r.getMessage().startswith("resolved ")]
    assert measures
    for before, after in measures:
        assert after <= before
        assert after[0] == 0
        if before[0]:
            assert after < before


def test_og_form_with_forced_epsilon_self_loops():
    rng = random.Random(43)
    for _ in range(50):
        p = random_system(rng)
        looped = Process.of(p.root, {n: Sum(Prefix(EPS, Const(n)), body) for n, body in p.env.items()})
        assert not is_og_system(looped.root, looped.env)
        result, proof = to_og(looped)
        assert is_og_system(result.root, result.env)
        assert _same_language(looped, result)
        assert_sound(proof)


# ---------------------------------------------------------------------------
# Stages chained
# ---------------------------------------------------------------------------

def test_stages_chain_to_a_complete_dfa():
    rng = random.Random(31)
    chained = 0
    while chained < 50:
        p = random_system(rng)
        if not is_og_system(p.root, p.env):
            continue
        n, nf_proof = to_normal_form(p, "Wg")
        e, eps_proof = to_eps_free(n)
        d, det_proof = to_deterministic(e, "ab")
        for proof in (nf_proof, eps_proof, det_proof):
            assert_sound(proof)
        assert _same_language(p, d)
        assert not _uses_eps(d)
        chained += 1


def test_every_stage_is_sound_on_random_systems():
    rng = random.Random(67)
    for _ in range(500):
        p = random_system(rng)
        assert_sound(prove_unfold(p.root.name, p.env))
        _, b_proof = to_normal_form(p, "B")
        o, og_proof = to_og(p)
        n, nf_proof = to_normal_form(o, "Wg")
        e, eps_proof = to_eps_free(n)
        d, det_proof = to_deterministic(e, "ab")
        for proof in (b_proof, og_proof, nf_proof, eps_proof, det_proof):
            assert_sound(proof)
        assert _same_language(p, d)


# ---------------------------------------------------------------------------
# Complete prover
# ---------------------------------------------------------------------------

def test_prove_equivalence_astar_bstar_pair(astar_bstar_nfa, astar_bstar_dfa):
    verdict = prove_equivalence(compile(astar_bstar_nfa), compile(astar_bstar_dfa))
    assert isinstance(verdict, Equal)
    lhs, rhs = verdict.proof.conclusion
    assert lhs == Const("C0")
    assert rhs != lhs
    assert_sound(verdict.proof)


def test_prove_equivalence_distinct(eps_loop: Process):
    verdict = prove_equivalence(eps_loop, Process.of(parse_term("a.1 + b.1"), {}))
    assert isinstance(verdict, Distinct)
    assert verdict.word == "b"


def test_prove_equivalence_removes_epsilon_loop(eps_loop: Process):
    verdict = prove_equivalence(eps_loop, Process.of(parse_term("a.1"), {}))
    assert isinstance(verdict, Equal)
    assert verdict.proof.conclusion == (Const("C"), parse_term("a.1"))
    assert_sound(verdict.proof)


def test_prove_equivalence_rejects_open_processes():
    p = Process.of(parse_expression("a.$x"), {})
    with pytest.raises(NotClosed):
        prove_equivalence(p, p)


def test_prove_equivalence_random_pairs():
    rng = random.Random(37)
    distinct = 0
    while distinct < 100:
        p, q = random_system(rng, constants=2), random_system(rng, constants=2)
        verdict = prove_equivalence(p, q)
        if isinstance(verdict, Equal):
            assert_sound(verdict.proof)
            continue
        assert _accepts(denote(p), verdict.witness) != _accepts(denote(q), verdict.witness)
        distinct += 1


def test_prove_equivalence_is_complete_on_random_systems():
    rng = random.Random(41)
    for i in range(100):
        p = random_system(rng, constants=2)
        if i % 2:
            q = compile(determinize(denote(p), {"a", "b"}))
        else:
            q = rewrite_system(rng, p, rng.randint(1, 10))
        verdict = prove_equivalence(p, q)
        assert isinstance(verdict, Equal)
        assert_sound(verdict.proof)
