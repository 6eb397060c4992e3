"""
Reductions to normal forms, each with its proof.

Every stage has two faces: a builder-level function taking a
:class:`ProofBuilder` and the name of a root constant and returning the
new root together with the index of a step proving ``old = new``, and a
public wrapper taking and returning immutable :class:`Process` values.
The builder-level functions share one environment and one fresh-name
counter when chained by :func:`sfm1.proofs.equivalence.prove_equivalence`.

Design notes
------------
- Each stage sets up a system of templates over fresh unknowns and two
  solutions of it (the new constants, unfolded by R1, and the old terms,
  rearranged by the choice laws) and lets :func:`solutions.solve` equate
  them.
- Generated constants: ``D%n`` for normal and ε-free forms, ``D{1,2}``
  (or ``D%n{1,2}`` when ``D{`` is taken) for subset constructions, and
  ``G%n`` for the open constants of the elimination.
"""
from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable, Iterable

from sfm1.exceptions import (
    NotDeterministic,
    NotEpsFree,
    NotEquivalent,
    NotNf,
    NotOg,
    PreconditionError,
)
from sfm1.proofs.builder import ProofBuilder, merge_processes
from sfm1.proofs.model import AxiomId, AxiomSet, Proof
from sfm1.proofs.solutions import Side, solve
from sfm1.terms import (
    EPS,
    ONE,
    ZERO,
    Const,
    Environment,
    One,
    Prefix,
    Process,
    Sum,
    Term,
    Var,
    Zero,
    alphabet,
    constants_in_order,
    is_og_system,
    lookup,
    nf,
    sum_of,
    summands,
)

logger = logging.getLogger(__name__)

Stage = Callable[..., tuple[str, int]]


def uses_eps(p: Term, env: Environment) -> bool:
    """Whether an ε-prefix occurs in *p* or in a body it reaches."""
    stack = [p, *(env[n] for n in constants_in_order(p, env) if n in env)]
    while stack:
        t = stack.pop()
        if isinstance(t, Prefix):
            if t.label == EPS:
                return True
            stack.append(t.body)
        elif isinstance(t, Sum):
            stack.extend((t.left, t.right))
    return False


def run_stage(p: Process, axiom_set: AxiomSet, stage: Stage, *args: object) -> tuple[Process, Proof]:
    b = ProofBuilder(p.env, axiom_set)
    name, lifted = b.lift(p.root)
    root, k = stage(b, name, *args)
    b.conclude(b.trans(lifted, k))
    result = Process.of(Const(root), b.env).restricted()
    logger.info("%s: %d constants, %d proof steps", stage.__name__, len(result.env), len(b.steps))
    return result, b.build()


def _side(b: ProofBuilder, terms: Iterable[Term], prove: Callable[[Term], int]) -> Side:
    return [(t, prove(t)) for t in terms]


def _unfolded(b: ProofBuilder) -> Callable[[Term], int]:
    def prove(t: Term) -> int:
        assert isinstance(t, Const)
        return b.unfold(t.name)

    return prove


# ---------------------------------------------------------------------------
# Unfolding
# ---------------------------------------------------------------------------

def prove_unfold(name: str, env: Environment) -> Proof:
    """The one-step proof ``C = body(C)``."""
    b = ProofBuilder(env, AxiomSet.B)
    b.unfold(name)
    return b.build()


# ---------------------------------------------------------------------------
# Normal form
# ---------------------------------------------------------------------------

def normal_form(b: ProofBuilder, name: str, axiom_set: AxiomSet = AxiomSet.WG) -> tuple[str, int]:
    root = Const(name)
    if axiom_set is AxiomSet.WG and not is_og_system(root, b.env):
        raise NotOg(f"{name} is not observationally guarded")
    if nf(root, b.env):
        return name, b.refl(root)

    units: dict[Term, str] = {}
    order: list[Term] = []
    queue: deque[Term] = deque()

    def unit(t: Term) -> str:
        if t not in units:
            units[t] = b.fresh_var()
            order.append(t)
            queue.append(t)
        return units[t]

    def shape(t: Term) -> Term:
        if isinstance(t, Prefix):
            return t if isinstance(t.body, Var) else Prefix(t.label, Var(unit(t.body)))
        if isinstance(t, Sum):
            return Sum(shape(t.left), shape(t.right))
        return t

    unit(root)
    templates: dict[Term, Term] = {}
    while queue:
        u = queue.popleft()
        templates[u] = shape(lookup(b.env, u.name) if isinstance(u, Const) else u)

    names = {u: b.names.fresh("D") for u in order}
    xs = [units[u] for u in order]
    rho = {units[u]: Const(names[u]) for u in order}
    for u in order:
        b.define(names[u], b.table.substitute(templates[u], rho))

    side_a = _side(b, (Const(names[u]) for u in order), _unfolded(b))
    side_b = _side(b, order, lambda u: b.unfold(u.name) if isinstance(u, Const) else b.refl(u))
    axiom = AxiomId.R2P if axiom_set is AxiomSet.B else AxiomId.R2
    results = solve(b, [templates[u] for u in order], xs, side_a, side_b, axiom)
    logger.debug("normal form of %s: %d constants", name, len(order))
    return names[root], b.sym(results[0])


def to_normal_form(p: Process, axiom_set: AxiomSet | str = AxiomSet.B) -> tuple[Process, Proof]:
    """
    A normal form of *p* (every prefix body a constant) with a proof in
    B (``"B"``, folding by R2P) or Wg (``"Wg"``, *p* must be og).
    """
    axiom_set = AxiomSet(axiom_set)
    if axiom_set is AxiomSet.W:
        raise ValueError("normal forms are proven in B or Wg")
    return run_stage(p, axiom_set, normal_form, axiom_set)


# ---------------------------------------------------------------------------
# ε-free normal form
# ---------------------------------------------------------------------------

def _eps_leaves(t: Term, path: tuple[str, ...] = ()) -> Iterable[tuple[tuple[str, ...], Const]]:
    if isinstance(t, Sum):
        yield from _eps_leaves(t.left, (*path, "left"))
        yield from _eps_leaves(t.right, (*path, "right"))
    elif isinstance(t, Prefix) and t.label == EPS and isinstance(t.body, Const):
        yield path, t.body


def eps_free(b: ProofBuilder, name: str) -> tuple[str, int]:
    root = Const(name)
    if not uses_eps(root, b.env):
        return name, b.refl(root)
    if not nf(root, b.env):
        raise NotNf(f"{name} is not in normal form")
    if not is_og_system(root, b.env):
        raise NotOg(f"{name} is not observationally guarded")

    expansions: dict[str, list[Term]] = {}
    proofs: dict[str, int] = {}

    def expand(c: str) -> list[Term]:
        found = expansions.get(c)
        if found is None:
            found = []
            for s in summands(b.env[c]):
                items = expand(s.body.name) if isinstance(s, Prefix) and s.label == EPS else [s]
                found.extend(i for i in items if i != ZERO and i not in found)
            found = found or [ZERO]
            expansions[c] = found
        return found

    def prove(c: str) -> int:
        k = proofs.get(c)
        if k is None:
            k = b.unfold(c)
            current = b.env[c]
            for path, target in _eps_leaves(current):
                inner = b.trans(b.prefix_cong(EPS, prove(target.name)),
                                b.t3(sum_of(expand(target.name))))
                step = b.rewrite_at(current, path, inner)
                k, current = b.trans(k, step), b.sides(step)[1]
            k = b.trans(k, b.prove_aci_equal(current, sum_of(expand(c))))
            proofs[c] = k
        return k

    order = [name]
    queue = deque([name])
    while queue:
        for s in expand(queue.popleft()):
            if isinstance(s, Prefix) and isinstance(s.body, Const) and s.body.name not in order:
                order.append(s.body.name)
                queue.append(s.body.name)

    names = {c: b.names.fresh("D") for c in order}
    xs = {c: b.fresh_var() for c in order}

    def shape(s: Term) -> Term:
        return Prefix(s.label, Var(xs[s.body.name])) if isinstance(s, Prefix) else s

    templates = [sum_of(shape(s) for s in expand(c)) for c in order]
    rho = {xs[c]: Const(names[c]) for c in order}
    for c, template in zip(order, templates):
        b.define(names[c], b.table.substitute(template, rho))

    side_a = _side(b, (Const(names[c]) for c in order), _unfolded(b))
    side_b = _side(b, (Const(c) for c in order), lambda t: prove(t.name))
    results = solve(b, templates, [xs[c] for c in order], side_a, side_b, AxiomId.R2)
    logger.debug("ε-free form of %s: %d constants", name, len(order))
    return names[name], b.sym(results[0])


def to_eps_free(p: Process) -> tuple[Process, Proof]:
    """An ε-free normal form of the og normal form *p*, proven in Wg."""
    return run_stage(p, AxiomSet.WG, eps_free)


# ---------------------------------------------------------------------------
# Deterministic normal form
# ---------------------------------------------------------------------------

def _comb_path(n: int, j: int) -> tuple[str, ...]:
    """Position of the *j*-th of *n* summands in their left-associated sum."""
    if j == 0:
        return ("left",) * (n - 1)
    return ("left",) * (n - 1 - j) + ("right",)


def _subset_suffix(members: Iterable[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(members)) + "}"


def deterministic(b: ProofBuilder, name: str, symbols: Iterable[str]) -> tuple[str, int]:
    root = Const(name)
    if not nf(root, b.env):
        raise NotNf(f"{name} is not in normal form")
    if uses_eps(root, b.env):
        raise NotEpsFree(f"{name} has ε-transitions")
    letters = sorted(set(symbols))
    foreign = alphabet(root, b.env) - set(letters)
    if foreign:
        raise PreconditionError(f"symbols {sorted(foreign)} are not in the alphabet")

    constants = constants_in_order(root, b.env)
    index = {c: i for i, c in enumerate(constants, start=1)}
    by_index = {i: c for c, i in index.items()}

    def raw_successors(members: frozenset[int], a: str) -> frozenset[int]:
        return frozenset(
            index[s.body.name]
            for i in members
            for s in summands(b.env[by_index[i]])
            if isinstance(s, Prefix) and s.label == a
        )

    def empty(members: frozenset[int]) -> bool:
        # every member body is a sum of zeros
        return all(isinstance(s, Zero) for i in members for s in summands(b.env[by_index[i]]))

    def canon(members: frozenset[int]) -> frozenset[int]:
        return frozenset() if empty(members) else members

    def successors(members: frozenset[int], a: str) -> frozenset[int]:
        return canon(raw_successors(members, a))

    def final(members: frozenset[int]) -> bool:
        return any(isinstance(s, One) for i in members for s in summands(b.env[by_index[i]]))

    start = canon(frozenset({1}))
    subsets = [start]
    moves: dict[frozenset[int], list[frozenset[int]]] = {}
    queue = deque([start])
    while queue:
        members = queue.popleft()
        moves[members] = [successors(members, a) for a in letters]
        for target in moves[members]:
            if target not in moves and target not in queue:
                subsets.append(target)
                queue.append(target)

    family = b.names.family("D", b.env)
    names = {m: f"{family}{_subset_suffix(m)}" for m in subsets}
    xs = {m: b.fresh_var() for m in subsets}
    templates = [
        sum_of([Prefix(a, Var(xs[t])) for a, t in zip(letters, moves[m])] + ([ONE] if final(m) else []))
        for m in subsets
    ]
    rho_a = {xs[m]: Const(names[m]) for m in subsets}
    for m, template in zip(subsets, templates):
        b.define(names[m], b.table.substitute(template, rho_a))

    def solution(members: frozenset[int]) -> Term:
        if len(members) == 1:
            return Const(by_index[next(iter(members))])
        return sum_of(b.env[by_index[i]] for i in sorted(members))

    def distribute(a: str, members: frozenset[int]) -> int:
        # a.m(J) = sum of a.C_j for j in J
        if not members:
            return b.t1(a)
        if len(members) == 1:
            return b.refl(Prefix(a, solution(members)))
        bodies = [b.env[by_index[i]] for i in sorted(members)]

        def spread(items: list[Term]) -> int:
            if len(items) == 1:
                return b.refl(Prefix(a, items[0]))
            k = b.t2(a, sum_of(items[:-1]), items[-1])
            return b.trans(k, b.left_cong(spread(items[:-1]), Prefix(a, items[-1])))

        k = spread(bodies)
        current = b.sides(k)[1]
        for j, i in enumerate(sorted(members)):
            back = b.prefix_cong(a, b.sym(b.unfold(by_index[i])))
            step = b.rewrite_at(current, _comb_path(len(bodies), j), back)
            k, current = b.trans(k, step), b.sides(step)[1]
        return k

    rho_b = {xs[m]: solution(m) for m in subsets}

    def vanish(c: str) -> int:
        # C = 0 for a constant whose body is a sum of zeros
        return b.trans(b.unfold(c), b.prove_aci_equal(b.env[c], ZERO))

    def clear(t: Term, dead: set[str]) -> int:
        """Rewrite every ``a.C`` with *a* in *dead* to ``0``."""
        if isinstance(t, Sum):
            kl = clear(t.left, dead)
            return b.trans(b.left_cong(kl, t.right), b.right_cong(b.sides(kl)[1], clear(t.right, dead)))
        if isinstance(t, Prefix) and t.label in dead and isinstance(t.body, Const):
            return b.trans(b.prefix_cong(t.label, vanish(t.body.name)), b.t1(t.label))
        return b.refl(t)

    def prove(members: frozenset[int], target: Term) -> int:
        m = solution(members)
        start_k = b.unfold(m.name) if isinstance(m, Const) else b.refl(m)
        dead = {a for a in letters if raw_successors(members, a) and not successors(members, a)}
        clear_k = clear(b.sides(start_k)[1], dead)
        current = b.sides(clear_k)[1]
        parts = len(letters) + final(members)
        spread_k = b.refl(target)
        spread_term = target
        for j, (a, t) in enumerate(zip(letters, moves[members])):
            step = b.rewrite_at(spread_term, _comb_path(parts, j), distribute(a, t))
            spread_k, spread_term = b.trans(spread_k, step), b.sides(step)[1]
        return b.chain(start_k, clear_k, b.prove_aci_equal(current, spread_term), b.sym(spread_k))

    side_a = _side(b, (Const(names[m]) for m in subsets), _unfolded(b))
    side_b = [
        (solution(m), prove(m, b.table.substitute(template, rho_b)))
        for m, template in zip(subsets, templates)
    ]
    results = solve(b, templates, [xs[m] for m in subsets], side_a, side_b, AxiomId.R2)
    logger.debug("deterministic form of %s: %d subsets", name, len(subsets))
    if start:
        return names[start], b.sym(results[0])
    return names[start], b.trans(vanish(name), b.sym(results[0]))


def to_deterministic(p: Process, symbols: Iterable[str]) -> tuple[Process, Proof]:
    """
    A deterministic normal form of the ε-free normal form *p* over *symbols*, proven in Wg.

    Subsets whose constants all have empty bodies are the sink ``D{}``, so
    ``C := 0`` over ``a`` becomes the single equation ``D{} := a.D{}``.
    """
    return run_stage(p, AxiomSet.WG, deterministic, tuple(symbols))


# ---------------------------------------------------------------------------
# Equality of deterministic forms
# ---------------------------------------------------------------------------

def _moves(b: ProofBuilder, name: str, letters: list[str]) -> tuple[list[str], bool]:
    targets: dict[str, str] = {}
    final = False
    for s in summands(b.env[name]):
        if isinstance(s, One):
            final = True
        elif isinstance(s, Prefix) and isinstance(s.body, Const) and s.label not in targets:
            targets[s.label] = s.body.name
        elif not isinstance(s, Zero):
            raise NotDeterministic(f"{name} has the summand {s}")
    if sorted(targets) != letters:
        raise NotDeterministic(f"{name} does not move exactly once on each of {letters}")
    return [targets[a] for a in letters], final


def det_equal(b: ProofBuilder, left: str, right: str, symbols: Iterable[str] | None = None) -> int:
    if left == right:
        return b.refl(Const(left))
    letters = sorted(set(symbols) if symbols is not None else alphabet(Const(left), b.env))
    pairs = [(left, right)]
    moves: dict[tuple[str, str], list[tuple[str, str]]] = {}
    queue = deque(pairs)
    while queue:
        h1, h2 = pair = queue.popleft()
        (t1, f1), (t2, f2) = _moves(b, h1, letters), _moves(b, h2, letters)
        if f1 != f2:
            raise NotEquivalent(f"{h1} and {h2} disagree on acceptance")
        moves[pair] = list(zip(t1, t2))
        for target in moves[pair]:
            if target not in moves and target not in queue:
                pairs.append(target)
                queue.append(target)

    xs = {pair: b.fresh_var() for pair in pairs}
    templates = [
        sum_of([Prefix(a, Var(xs[t])) for a, t in zip(letters, moves[pair])]
               + ([ONE] if _moves(b, pair[0], letters)[1] else []))
        for pair in pairs
    ]
    sides: list[Side] = []
    for component in (0, 1):
        rho = {xs[pair]: Const(pair[component]) for pair in pairs}
        side: Side = []
        for pair, template in zip(pairs, templates):
            name = pair[component]
            expected = b.table.substitute(template, rho)
            side.append((Const(name), b.trans(b.unfold(name), b.prove_aci_equal(b.env[name], expected))))
        sides.append(side)
    results = solve(b, templates, [xs[pair] for pair in pairs], sides[0], sides[1], AxiomId.R2)
    logger.debug("deterministic forms %s and %s: %d pairs", left, right, len(pairs))
    return results[0]


def prove_det_equal(p1: Process, p2: Process, symbols: Iterable[str] | None = None) -> Proof:
    """Proof of ``root1 = root2`` for language-equivalent deterministic normal forms."""
    p1, p2 = merge_processes(p1, p2)
    b = ProofBuilder(p1.env, AxiomSet.WG)
    left, k1 = b.lift(p1.root)
    right, k2 = b.lift(p2.root)
    if symbols is None:
        symbols = alphabet(p1.root, p1.env) | alphabet(p2.root, p2.env)
    b.conclude(b.chain(k1, det_equal(b, left, right, symbols), b.sym(k2)))
    return b.build()
