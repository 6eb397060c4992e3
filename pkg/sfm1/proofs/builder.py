"""
Proof construction.

A :class:`ProofBuilder` owns everything a single query mutates: the
growing environment, the copy table used for substitution, the fresh-name
counter and the list of emitted steps.  Procedures are written against
step indices: every helper returns the index of a step proving the
equation it promises, and reuses an existing step whenever it can.

Design notes
------------
- Reflexivity steps are memoised per term and are the identity of
  :meth:`ProofBuilder.trans`, so congruences over unchanged parts cost
  nothing.
- Constants added to the environment are recorded in the ``introduced``
  field of the next emitted step; the checker rebuilds the environment
  from those records.
- ``fold_info`` remembers, for each open constant ``G ≐ p{G/x}`` created
  by a procedure, the pair ``(p, x)``.  :meth:`ProofBuilder.gcong` relies
  on it to transport equalities through copies of such constants with the
  Recursion rule.
"""
from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from itertools import islice
from types import MappingProxyType

from sfm1.exceptions import ProofConstructionError, SortViolation
from sfm1.proofs.model import AxiomId, AxiomSet, Binding, Proof, ProofStep, Rule
from sfm1.terms import (
    EPS,
    ZERO,
    Const,
    CopyTable,
    Environment,
    FreshNames,
    Prefix,
    Process,
    Sum,
    Term,
    Var,
    Zero,
    base_name,
    constants_in_order,
    direct_constants,
    free_vars,
    is_guarded,
    lookup,
    render,
    sum_of,
    well_sorted,
)

logger = logging.getLogger(__name__)

Path = Sequence[str]


def _summand_key(t: Term) -> tuple[bool, str]:
    return isinstance(t, Zero), render(t)


class ProofBuilder:
    def __init__(self, env0: Environment, axiom_set: AxiomSet = AxiomSet.W) -> None:
        self.env0: Environment = MappingProxyType(dict(env0))
        self.env: dict[str, Term] = dict(env0)
        self.axiom_set = axiom_set
        self.names = FreshNames(lambda n: n in self.env)
        self.table = CopyTable(self.env, self.names)
        self.steps: list[ProofStep] = []
        self.fold_info: dict[str, tuple[Term, str]] = {}
        self._flushed = len(self.env)
        self._refl: dict[Term, int] = {}
        self._refl_steps: set[int] = set()
        self._unfolded: dict[str, int] = {}
        self._gcong: dict[tuple, int] = {}
        self._var_taken: set[str] = set()
        for body in self.env.values():
            self._var_taken |= free_vars(body, self.env)
        self._var_next = 1

    # ------------------------------------------------------------------
    # Bookkeeping
    # ------------------------------------------------------------------

    def step(self, k: int) -> ProofStep:
        return self.steps[k]

    def sides(self, k: int) -> tuple[Term, Term]:
        s = self.steps[k]
        return s.lhs, s.rhs

    def fresh_var(self, base: str = "x") -> str:
        while True:
            name = f"{base}%{self._var_next}"
            self._var_next += 1
            if name not in self._var_taken:
                self._var_taken.add(name)
                return name

    def define(self, name: str, body: Term, fold: tuple[Term, str] | None = None) -> Const:
        if name in self.env:
            raise ProofConstructionError(f"constant {name} is already defined")
        if not is_guarded(body) or not well_sorted(body):
            raise SortViolation(f"{render(body)} cannot define {name}")
        self.env[name] = body
        self.table.forget_vars()
        if fold is not None:
            self.fold_info[name] = fold
        logger.debug("define %s := %s", name, render(body))
        return Const(name)

    def emit(
        self,
        lhs: Term,
        rhs: Term,
        rule: Rule,
        premises: Sequence[int] = (),
        axiom: AxiomId | None = None,
        bindings: Mapping[str, Binding] | None = None,
    ) -> int:
        introduced = tuple((n, self.env[n]) for n in islice(self.env, self._flushed, None))
        self._flushed = len(self.env)
        index = len(self.steps)
        self.steps.append(
            ProofStep(
                index=index,
                lhs=lhs,
                rhs=rhs,
                rule=rule,
                premises=tuple(premises),
                axiom=axiom,
                bindings=dict(bindings or {}),
                introduced=introduced,
            )
        )
        return index

    def build(self) -> Proof:
        """Freeze the emitted steps; the last step is the conclusion."""
        if not self.steps:
            raise ProofConstructionError("no steps were emitted")
        env_n = dict(self.env0)
        for s in self.steps:
            env_n.update(s.introduced)
        logger.debug("proof built: %d steps, %d constants introduced",
                     len(self.steps), len(env_n) - len(self.env0))
        return Proof(
            axiom_set=self.axiom_set,
            steps=tuple(self.steps),
            env0=self.env0,
            env_n=MappingProxyType(env_n),
        )

    # ------------------------------------------------------------------
    # Deduction rules
    # ------------------------------------------------------------------

    def refl(self, t: Term) -> int:
        k = self._refl.get(t)
        if k is None:
            k = self.emit(t, t, Rule.REFLEXIVITY)
            self._refl[t] = k
            self._refl_steps.add(k)
        return k

    def is_refl(self, k: int) -> bool:
        return k in self._refl_steps

    def sym(self, k: int) -> int:
        if self.is_refl(k):
            return k
        lhs, rhs = self.sides(k)
        return self.emit(rhs, lhs, Rule.SYMMETRY, (k,))

    def trans(self, k1: int, k2: int) -> int:
        (a, b1), (b2, c) = self.sides(k1), self.sides(k2)
        if b1 != b2:
            raise ProofConstructionError(f"cannot chain {render(b1)} with {render(b2)}")
        if self.is_refl(k1):
            return k2
        if self.is_refl(k2):
            return k1
        return self.emit(a, c, Rule.TRANSITIVITY, (k1, k2))

    def chain(self, *ks: int) -> int:
        result = ks[0]
        for k in ks[1:]:
            result = self.trans(result, k)
        return result

    def conclude(self, k: int) -> int:
        """Make *k*'s equation the last step."""
        if k == len(self.steps) - 1:
            return k
        return self.restate([k])[0]

    def restate(self, ks: Sequence[int]) -> list[int]:
        """Repeat the equations of *ks*, in order, as the last steps."""
        anchors = [self.refl(self.sides(k)[1]) for k in ks]
        restated = []
        for k, anchor in zip(ks, anchors):
            lhs, rhs = self.sides(k)
            if lhs == rhs:
                restated.append(self.emit(lhs, rhs, Rule.REFLEXIVITY))
            else:
                restated.append(self.emit(lhs, rhs, Rule.TRANSITIVITY, (k, anchor)))
        return restated

    def prefix_cong(self, label: str, k: int) -> int:
        lhs, rhs = self.sides(k)
        if self.is_refl(k):
            return self.refl(Prefix(label, lhs))
        return self.emit(Prefix(label, lhs), Prefix(label, rhs), Rule.SUBSTITUTIVITY, (k,),
                         bindings={"position": "body"})

    def left_cong(self, k: int, right: Term) -> int:
        lhs, rhs = self.sides(k)
        if self.is_refl(k):
            return self.refl(Sum(lhs, right))
        return self.emit(Sum(lhs, right), Sum(rhs, right), Rule.SUBSTITUTIVITY, (k,),
                         bindings={"position": "left"})

    def right_cong(self, left: Term, k: int) -> int:
        lhs, rhs = self.sides(k)
        if self.is_refl(k):
            return self.refl(Sum(left, lhs))
        return self.emit(Sum(left, lhs), Sum(left, rhs), Rule.SUBSTITUTIVITY, (k,),
                         bindings={"position": "right"})

    def rewrite_at(self, term: Term, path: Path, k: int) -> int:
        """Lift *k* (about the subterm of *term* at *path*) to *term*."""
        if not path:
            return k
        head, rest = path[0], path[1:]
        if head == "body" and isinstance(term, Prefix):
            return self.prefix_cong(term.label, self.rewrite_at(term.body, rest, k))
        if head == "left" and isinstance(term, Sum):
            return self.left_cong(self.rewrite_at(term.left, rest, k), term.right)
        if head == "right" and isinstance(term, Sum):
            return self.right_cong(term.left, self.rewrite_at(term.right, rest, k))
        raise ProofConstructionError(f"no {head} position in {render(term)}")

    def recursion(self, k: int, var: str, lhs: str, rhs: str) -> int:
        if lhs == rhs:
            return self.refl(Const(lhs))
        return self.emit(Const(lhs), Const(rhs), Rule.RECURSION, (k,), bindings={"var": Var(var)})

    # ------------------------------------------------------------------
    # Axioms
    # ------------------------------------------------------------------

    def _axiom(self, lhs: Term, rhs: Term, axiom: AxiomId, premises: Sequence[int] = (),
               **bindings: Binding) -> int:
        return self.emit(lhs, rhs, Rule.AXIOM, premises, axiom, bindings)

    def a1(self, x: Term, y: Term, z: Term) -> int:
        return self._axiom(Sum(x, Sum(y, z)), Sum(Sum(x, y), z), AxiomId.A1, x=x, y=y, z=z)

    def a2(self, x: Term, y: Term) -> int:
        return self._axiom(Sum(x, y), Sum(y, x), AxiomId.A2, x=x, y=y)

    def a3(self, x: Term) -> int:
        return self._axiom(Sum(x, ZERO), x, AxiomId.A3, x=x)

    def a4(self, x: Term) -> int:
        return self._axiom(Sum(x, x), x, AxiomId.A4, x=x)

    def t1(self, alpha: str) -> int:
        return self._axiom(Prefix(alpha, ZERO), ZERO, AxiomId.T1, alpha=alpha)

    def t2(self, alpha: str, x: Term, y: Term) -> int:
        return self._axiom(Prefix(alpha, Sum(x, y)), Sum(Prefix(alpha, x), Prefix(alpha, y)),
                           AxiomId.T2, alpha=alpha, x=x, y=y)

    def t3(self, x: Term) -> int:
        return self._axiom(Prefix(EPS, x), x, AxiomId.T3, x=x)

    def unfold(self, name: str) -> int:
        k = self._unfolded.get(name)
        if k is None:
            k = self._axiom(Const(name), lookup(self.env, name), AxiomId.R1)
            self._unfolded[name] = k
        return k

    def fold(self, lhs: Term, template: Term, var: str, k: int, axiom: AxiomId) -> int:
        """``lhs = s`` from ``k: s = template{s/var}`` where ``lhs ≐ template{lhs/var}``."""
        return self._axiom(lhs, self.steps[k].lhs, axiom, (k,), template=template, var=Var(var))

    def excise(self, lhs: str, rhs: str, template: Term, var: str) -> int:
        return self._axiom(Const(lhs), Const(rhs), AxiomId.R3, template=template, var=Var(var))

    def lift(self, root: Term) -> tuple[str, int]:
        """A constant for *root* and a proof ``root = that constant``."""
        if isinstance(root, Const):
            lookup(self.env, root.name)
            return root.name, self.refl(root)
        name = self.names.fresh("R")
        self.define(name, root)
        return name, self.sym(self.unfold(name))

    # ------------------------------------------------------------------
    # Associativity, commutativity, idempotence of choice
    # ------------------------------------------------------------------

    def _append(self, left: Term, items: Sequence[Term]) -> int:
        """``left + sum_of(items) = sum_of([left's summands..., *items])``."""
        whole = Sum(left, sum_of(items))
        if len(items) == 1:
            return self.refl(whole)
        init, last = items[:-1], items[-1]
        k = self.a1(left, sum_of(init), last)
        return self.trans(k, self.left_cong(self._append(left, init), last))

    def flatten(self, t: Term) -> tuple[list[Term], int]:
        """Summands of *t* and a proof that *t* is their left-associated sum."""
        if not isinstance(t, Sum):
            return [t], self.refl(t)
        left, kl = self.flatten(t.left)
        right, kr = self.flatten(t.right)
        k = self.trans(self.left_cong(kl, t.right), self.right_cong(sum_of(left), kr))
        return left + right, self.trans(k, self._append(sum_of(left), right))

    def _local(self, items: list[Term], i: int, k: int) -> int:
        # *k* rewrites the node of sum_of(items) whose right operand is items[i + 1]
        depth = len(items) - 2 - i
        return self.rewrite_at(sum_of(items), ("left",) * depth, k)

    def _swap(self, items: list[Term], i: int) -> int:
        s, t = items[i], items[i + 1]
        if i == 0:
            local = self.a2(s, t)
        else:
            p = sum_of(items[:i])
            local = self.chain(self.sym(self.a1(p, s, t)), self.right_cong(p, self.a2(s, t)),
                               self.a1(p, t, s))
        return self._local(items, i, local)

    def _merge(self, items: list[Term], i: int) -> int:
        s = items[i]
        if i == 0:
            local = self.a4(s)
        else:
            p = sum_of(items[:i])
            local = self.trans(self.sym(self.a1(p, s, s)), self.right_cong(p, self.a4(s)))
        return self._local(items, i, local)

    def normalize(self, t: Term) -> tuple[list[Term], int]:
        """
        Sorted, duplicate-free summands of *t* without ``0`` (unless *t*
        is all zeros) and a proof that *t* equals their sum.
        """
        items, k = self.flatten(t)
        changed = True
        while changed:
            changed = False
            for i in range(len(items) - 1):
                if _summand_key(items[i]) > _summand_key(items[i + 1]):
                    k = self.trans(k, self._swap(items, i))
                    items[i], items[i + 1] = items[i + 1], items[i]
                    changed = True
        i = 0
        while i < len(items) - 1:
            if items[i] == items[i + 1]:
                k = self.trans(k, self._merge(items, i))
                del items[i + 1]
            else:
                i += 1
        if len(items) > 1 and items[-1] == ZERO:
            k = self.trans(k, self.a3(sum_of(items[:-1])))
            items.pop()
        return items, k

    def prove_aci_equal(self, s: Term, t: Term) -> int:
        if s == t:
            return self.refl(s)
        ns, ks = self.normalize(s)
        nt, kt = self.normalize(t)
        if ns != nt:
            raise ProofConstructionError(
                f"{render(s)} and {render(t)} differ modulo choice laws"
            )
        return self.trans(ks, self.sym(kt))

    # ------------------------------------------------------------------
    # Congruence through substitution
    # ------------------------------------------------------------------

    def gcong(
        self,
        t: Term,
        rho1: Mapping[str, Term],
        rho2: Mapping[str, Term],
        eqs: Mapping[str, int],
    ) -> int:
        """
        Proof of ``t[rho1] = t[rho2]`` from proofs ``eqs[v]: rho1[v] = rho2[v]``.

        Copies of open constants are related by the Recursion rule over the
        template their origin folds.
        """
        lhs = self.table.substitute(t, rho1)
        rhs = self.table.substitute(t, rho2)
        if lhs == rhs:
            return self.refl(lhs)
        key = (t, tuple(sorted(rho1.items())), tuple(sorted(rho2.items())),
               tuple(sorted(eqs.items())))
        cached = self._gcong.get(key)
        if cached is not None:
            return cached
        if isinstance(t, Var):
            k = eqs.get(t.name)
            if k is None or self.sides(k) != (lhs, rhs):
                raise ProofConstructionError(f"no equation for ${t.name}")
        elif isinstance(t, Prefix):
            k = self.prefix_cong(t.label, self.gcong(t.body, rho1, rho2, eqs))
        elif isinstance(t, Sum):
            kl = self.gcong(t.left, rho1, rho2, eqs)
            kr = self.gcong(t.right, rho1, rho2, eqs)
            k = self.trans(self.left_cong(kl, self.table.substitute(t.right, rho1)),
                           self.right_cong(self.table.substitute(t.left, rho2), kr))
        elif isinstance(t, Const):
            assert isinstance(lhs, Const) and isinstance(rhs, Const)
            k = self._const_cong(t.name, lhs.name, rhs.name, rho1, rho2, eqs)
        else:
            raise ProofConstructionError(f"cannot relate {render(lhs)} and {render(rhs)}")
        self._gcong[key] = k
        return k

    def _const_cong(
        self,
        name: str,
        lhs: str,
        rhs: str,
        rho1: Mapping[str, Term],
        rho2: Mapping[str, Term],
        eqs: Mapping[str, int],
    ) -> int:
        origin, sigma = self.table.provenance.get(name, (name, {}))
        info = self.fold_info.get(origin)
        if info is None:
            raise ProofConstructionError(f"{origin} is not a folded constant")
        template, z = info
        inner1: dict[str, Term] = {}
        inner2: dict[str, Term] = {}
        inner_eqs: dict[str, int] = {}
        for y in sorted(self.table.const_vars(origin)):
            value = sigma.get(y, Var(y))
            inner1[y] = self.table.substitute(value, rho1)
            inner2[y] = self.table.substitute(value, rho2)
            if inner1[y] != inner2[y]:
                inner_eqs[y] = self.gcong(value, rho1, rho2, eqs)
        premise = self.gcong(template, inner1, inner2, inner_eqs)
        return self.recursion(premise, z, lhs, rhs)


# ---------------------------------------------------------------------------
# Joint environments
# ---------------------------------------------------------------------------

def _rename(t: Term, mapping: Mapping[str, str]) -> Term:
    if isinstance(t, Const):
        return Const(mapping.get(t.name, t.name))
    if isinstance(t, Prefix):
        return Prefix(t.label, _rename(t.body, mapping))
    if isinstance(t, Sum):
        return Sum(_rename(t.left, mapping), _rename(t.right, mapping))
    return t


def merge_processes(p: Process, q: Process) -> tuple[Process, Process]:
    """
    *p* and *q* over one environment.

    A constant defined in both keeps its name when both definitions are
    identical and only use constants that are kept as well; every other
    constant of *q* whose name *p* uses is renamed ``<base>%<k>`` with the
    smallest unused *k*.
    """
    p, q = p.restricted(), q.restricted()
    shared = {n for n in q.env if n in p.env and p.env[n] == q.env[n]}
    changed = True
    while changed:
        changed = False
        for n in sorted(shared):
            if any(m not in shared for m in direct_constants(q.env[n])):
                shared.discard(n)
                changed = True
    taken = set(p.env) | set(q.env)
    mapping: dict[str, str] = {}
    for n in constants_in_order(q.root, q.env):
        if n in p.env and n not in shared:
            k = 1
            while f"{base_name(n)}%{k}" in taken:
                k += 1
            mapping[n] = f"{base_name(n)}%{k}"
            taken.add(mapping[n])
            logger.warning("constant %s of the second process renamed to %s", n, mapping[n])
    env = dict(p.env)
    for n, body in q.env.items():
        env[mapping.get(n, n)] = _rename(body, mapping)
    return Process.of(p.root, env), Process.of(_rename(q.root, mapping), env)
