"""
Unique solutions of guarded systems.

Given templates ``p_1 .. p_n`` over unknowns ``x_1 .. x_n`` and two
families of terms, each proven to solve the system
(``s_i = p_i[x := s]``), :func:`solve` proves the families equal
pointwise.  Unknowns are eliminated last first: the last one is closed by
an open constant ``G ≐ p_n{G/x_n}`` which every side folds onto, the
remaining templates are rewritten with ``G`` for ``x_n`` and the problem
recurses.  The equation for ``x_n`` is finally recovered by relating the
two instances of ``G`` through the already-proven equations.
"""
from __future__ import annotations

import logging
from collections.abc import Sequence

from sfm1.exceptions import NotASolution, NotOg, ProofConstructionError
from sfm1.proofs.builder import ProofBuilder
from sfm1.proofs.model import AxiomId, AxiomSet, Proof
from sfm1.terms import Const, Environment, Term, og, render

logger = logging.getLogger(__name__)

# (term, index of a step proving term = template[side substitution])
Side = list[tuple[Term, int]]


def verify_side(b: ProofBuilder, templates: Sequence[Term], xs: Sequence[str], side: Side) -> None:
    rho = {x: t for x, (t, _) in zip(xs, side)}
    for template, (term, k) in zip(templates, side):
        expected = b.table.substitute(template, rho)
        if b.sides(k) != (term, expected):
            raise NotASolution(f"{render(term)} does not solve {render(template)}")


def solve(
    b: ProofBuilder,
    templates: Sequence[Term],
    xs: Sequence[str],
    side_a: Side,
    side_b: Side,
    axiom: AxiomId = AxiomId.R2,
) -> list[int]:
    """Indices proving ``a_i = b_i`` for every unknown, in order."""
    verify_side(b, templates, xs, side_a)
    verify_side(b, templates, xs, side_b)
    logger.debug("eliminating %d unknowns", len(xs))
    return _eliminate(b, list(templates), list(xs), side_a, side_b, axiom)


def _eliminate(
    b: ProofBuilder,
    templates: list[Term],
    xs: list[str],
    side_a: Side,
    side_b: Side,
    axiom: AxiomId,
) -> list[int]:
    if all(ta == tb for (ta, _), (tb, _) in zip(side_a, side_b)):
        return [b.refl(t) for t, _ in side_a]
    n = len(xs)
    x, p = xs[-1], templates[-1]
    g = b.names.fresh("G")
    b.define(g, b.table.substitute(p, {x: Const(g)}), fold=(p, x))

    folds: list[int] = []
    outers: list[dict[str, Term]] = []
    rewritten: list[Side] = []
    for side in (side_a, side_b):
        outer = {xs[j]: side[j][0] for j in range(n - 1)}
        g_side = b.table.substitute(Const(g), outer)
        tau = b.table.substitute(p, outer)
        if axiom is AxiomId.R2 and not og(tau, b.env):
            raise NotOg(f"{render(tau)} is not observationally guarded in ${x}")
        fold = b.fold(g_side, tau, x, side[-1][1], axiom)
        full = {**outer, x: side[-1][0]}
        inner = {**outer, x: g_side}
        eqs = {x: b.sym(fold)}
        rewritten.append([
            (t, b.trans(k, b.gcong(templates[i], full, inner, eqs)))
            for i, (t, k) in enumerate(side[:-1])
        ])
        folds.append(fold)
        outers.append(outer)

    rest = [b.table.substitute(templates[i], {x: Const(g)}) for i in range(n - 1)]
    results = _eliminate(b, rest, xs[:-1], rewritten[0], rewritten[1], axiom) if n > 1 else []
    eqs = {xs[j]: results[j] for j in range(n - 1)}
    bridge = b.gcong(Const(g), outers[0], outers[1], eqs)
    return results + [b.chain(b.sym(folds[0]), bridge, folds[1])]


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------

def _solution_proof(b: ProofBuilder, term: Term, expected: Term) -> int:
    start = b.unfold(term.name) if isinstance(term, Const) else b.refl(term)
    current = b.sides(start)[1]
    return b.trans(start, b.prove_aci_equal(current, expected))


def _replayed(b: ProofBuilder, proof: Proof) -> dict[tuple[Term, Term], int]:
    if any(b.env.get(n, body) != body for n, body in proof.env0.items()):
        raise NotASolution("the given proof starts from another environment")
    offset: dict[int, int] = {}
    for s in proof.steps:
        b.env.update((n, body) for n, body in s.introduced if n not in b.env)
        offset[s.index] = b.emit(s.lhs, s.rhs, s.rule, [offset[k] for k in s.premises],
                                 s.axiom, s.bindings)
    b.table.forget_vars()
    return {(s.lhs, s.rhs): offset[s.index] for s in proof.steps}


def unique_solution(
    templates: Sequence[Term],
    variables: Sequence[str],
    constants: Sequence[str],
    solution: Sequence[Term],
    env: Environment,
    proof: Proof | None = None,
    axiom_set: AxiomSet = AxiomSet.WG,
) -> Proof:
    """
    Prove ``C_i = q_i`` for the constants ``C_i ≐ p_i[x := C]`` of *env*
    and a second solution ``q_i`` of the same system.

    Equations ``q_i = p_i[x := q]`` are taken from *proof* when it
    concludes them, and otherwise derived by unfolding and the choice
    laws.  The last ``n`` steps of the result conclude ``C_i = q_i`` in
    order.
    """
    if not (len(templates) == len(variables) == len(constants) == len(solution)):
        raise ValueError("templates, variables, constants and solution differ in length")
    axiom = AxiomId.R2P if axiom_set is AxiomSet.B else AxiomId.R2
    b = ProofBuilder(env, axiom_set)
    known = _replayed(b, proof) if proof is not None else {}
    if axiom is AxiomId.R2:
        for name in constants:
            if not og(Const(name), b.env):
                raise NotOg(f"{name} is not observationally guarded")

    side_a: Side = []
    side_b: Side = []
    rho_a = {x: Const(c) for x, c in zip(variables, constants)}
    rho_b = dict(zip(variables, solution))
    for template, name, q in zip(templates, constants, solution):
        pairs = ((Const(name), b.table.substitute(template, rho_a)),
                 (q, b.table.substitute(template, rho_b)))
        for side, (term, expected) in zip((side_a, side_b), pairs):
            k = known.get((term, expected))
            if k is None:
                try:
                    k = _solution_proof(b, term, expected)
                except ProofConstructionError:
                    raise NotASolution(
                        f"{render(term)} does not solve {render(template)}"
                    ) from None
            side.append((term, k))

    results = solve(b, templates, variables, side_a, side_b, axiom)
    b.restate(results)
    return b.build()
