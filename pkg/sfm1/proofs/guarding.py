"""
Reduction to an observationally guarded process.

Design notes
------------
- For every constant ``C`` that must be resolved, the constants reachable
  from it through ε-prefixes and sums form a tree of *nodes*, one per
  simple ε-path.  A node's template is its constant's body with each
  unguarded ``ε.C_m`` replaced by ``ε.$y`` for the nearest node of the
  path unfolding ``C_m`` (the node itself included) or by ``ε.N`` for a
  fresh open constant ``N`` standing for a new child node.
- Nodes are resolved bottom-up.  Child equations ``N = Q`` are pushed
  through ε by T3, the result is rearranged into ``ε.$y + q`` (or ``q``),
  the Recursion rule moves the node onto a constant for that shape and
  the excision axiom R3 drops the ε-loop.  ``q`` no longer mentions the
  node's own variable; the loops to ancestors are left for them.
- At the root of a tree no ancestor remains, so ``C = q`` with ``q`` a sum
  of ``a.t``, ``1`` and ``0``.  Folding those equations over the terms
  ``t`` (again by unique solutions) yields an ε-free normal form.
"""
from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable

from sfm1.exceptions import NotClosed, ProofConstructionError
from sfm1.proofs.builder import ProofBuilder
from sfm1.proofs.model import AxiomId, AxiomSet, Proof
from sfm1.proofs.normal_forms import run_stage
from sfm1.proofs.solutions import Side, solve
from sfm1.terms import (
    EPS,
    ZERO,
    Const,
    Prefix,
    Process,
    Sum,
    Term,
    Var,
    base_name,
    count_unguarded,
    free_vars,
    is_og_system,
    length,
    sum_of,
)

logger = logging.getLogger(__name__)

# (summands of the resolved shape, proof that the resolved term equals their sum)
Resolved = tuple[list[Term], int]

# (unguarded occurrences of the node variable, ε-length)
Measure = tuple[int, int]


def _push(b: ProofBuilder, t: Term, resolve: Callable[[str], tuple[Term, int]]) -> int:
    """Proof ``t = t'`` where every unguarded ``ε.C`` of *t* is replaced by ``resolve(C)``."""
    if isinstance(t, Sum):
        kl = _push(b, t.left, resolve)
        kr = _push(b, t.right, resolve)
        return b.trans(b.left_cong(kl, t.right), b.right_cong(b.sides(kl)[1], kr))
    if isinstance(t, Prefix) and t.label == EPS and not isinstance(t.body, Var):
        if isinstance(t.body, Const):
            _, k = resolve(t.body.name)
        else:
            k = _push(b, t.body, resolve)
        return b.trans(b.prefix_cong(EPS, k), b.t3(b.sides(k)[1]))
    return b.refl(t)


class _Tree:
    """The ε-path tree of one constant."""

    def __init__(self, b: ProofBuilder) -> None:
        self.b = b

    def measure(self, y: str, t: Term) -> Measure:
        """Unguarded occurrences of *y*, then length of the ε-computations to a variable."""
        return count_unguarded(y, t, self.b.env), length(t, self.b.env)

    def resolve(self, const: str, path: tuple[tuple[str, str], ...] = ()) -> tuple[str, list[Term], int]:
        """Node constant, its resolved summands and a proof ``node = sum(summands)``."""
        b = self.b
        y = b.fresh_var("y")
        chain = (*path, (const, y))
        children: dict[str, tuple[str, list[Term], int]] = {}

        def shape(t: Term) -> Term:
            if isinstance(t, Sum):
                return Sum(shape(t.left), shape(t.right))
            if isinstance(t, Prefix) and t.label == EPS:
                if isinstance(t.body, Const):
                    for ancestor, var in reversed(chain):
                        if ancestor == t.body.name:
                            return Prefix(EPS, Var(var))
                    if t.body.name not in children:
                        children[t.body.name] = self.resolve(t.body.name, chain)
                    return Prefix(EPS, Const(children[t.body.name][0]))
                return Prefix(EPS, shape(t.body))
            return t

        template = shape(b.env[const])
        if path:
            node = b.names.fresh(base_name(const))
            b.define(node, b.table.substitute(template, {y: Const(node)}), fold=(template, y))
        else:
            node = const
        by_node = {name: (sum_of(items), k) for name, items, k in children.values()}

        pushed = _push(b, template, lambda n: by_node[n])
        items, _ = b.normalize(b.sides(pushed)[1])
        loop = Prefix(EPS, Var(y))
        rest = [i for i in items if i != loop]
        q = sum_of(rest)
        looped = loop in items
        target = Sum(loop, q) if looped else q
        premise = b.trans(pushed, b.prove_aci_equal(b.sides(pushed)[1], target))
        if y in free_vars(q, b.env):
            raise ProofConstructionError(f"${y} survives in {q}")
        before, after = self.measure(y, template), self.measure(y, q)
        progress = before[0] > 0 or any(length(Const(n), b.env) for n, _, _ in children.values())
        if after > before or (progress and after == before):
            raise ProofConstructionError(f"measure of {const} does not decrease: {before} -> {after}")

        shaped = b.names.fresh(base_name(const))
        b.define(shaped, b.table.substitute(target, {y: Const(shaped)}), fold=(target, y))
        k = b.recursion(premise, y, node, shaped)
        if looped:
            excised = b.names.fresh(base_name(const))
            b.define(excised, q)
            k = b.chain(k, b.excise(shaped, excised, q, y), b.unfold(excised))
        else:
            k = b.trans(k, b.unfold(shaped))
        logger.debug("resolved %s at depth %d: measure %s -> %s", const, len(path), before, after)
        return node, rest or [ZERO], k


def og_form(b: ProofBuilder, name: str) -> tuple[str, int]:
    root = Const(name)
    if free_vars(root, b.env):
        raise NotClosed(f"{name} has free variables")
    if is_og_system(root, b.env):
        return name, b.refl(root)

    closed: dict[str, Resolved] = {}

    def close(c: str) -> Resolved:
        if c not in closed:
            _, items, k = _Tree(b).resolve(c)
            closed[c] = items, k
        return closed[c]

    def lookup_closed(c: str) -> tuple[Term, int]:
        items, k = close(c)
        return sum_of(items), k

    def state(t: Term) -> Resolved:
        if isinstance(t, Const):
            return close(t.name)
        k = _push(b, t, lookup_closed)
        items, kn = b.normalize(b.sides(k)[1])
        return items, b.trans(k, kn)

    states: list[Term] = [root]
    resolved: dict[Term, Resolved] = {}
    queue = deque(states)
    while queue:
        t = queue.popleft()
        resolved[t] = state(t)
        for item in resolved[t][0]:
            if isinstance(item, Prefix) and item.body not in resolved and item.body not in queue:
                states.append(item.body)
                queue.append(item.body)

    names = {t: b.names.fresh("E") for t in states}
    xs = {t: b.fresh_var() for t in states}

    def template(t: Term) -> Term:
        return sum_of(
            Prefix(i.label, Var(xs[i.body])) if isinstance(i, Prefix) else i
            for i in resolved[t][0]
        )

    templates = [template(t) for t in states]
    rho = {xs[t]: Const(names[t]) for t in states}
    for t, shape in zip(states, templates):
        b.define(names[t], b.table.substitute(shape, rho))

    side_a: Side = [(Const(names[t]), b.unfold(names[t])) for t in states]
    side_b: Side = [(t, resolved[t][1]) for t in states]
    results = solve(b, templates, [xs[t] for t in states], side_a, side_b, AxiomId.R2)
    logger.debug("guarded form of %s: %d states", name, len(states))
    return names[root], b.sym(results[0])


def to_og(p: Process) -> tuple[Process, Proof]:
    """An ε-free, observationally guarded normal form of the closed process *p*, proven in W."""
    return run_stage(p, AxiomSet.W, og_form)
