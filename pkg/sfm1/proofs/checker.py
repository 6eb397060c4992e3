"""
Independent proof checker.

Design notes
------------
- The checker shares no state with the procedures that build proofs: it
  replays the environment from ``env0`` and the ``introduced`` records,
  and validates each step from its judgment, premises and bindings only.
- Substitution instances are recognised coinductively (:class:`Matcher`):
  a pattern constant matches an actual constant when their bodies match
  under the same substitution, assuming the pair while comparing.  Fresh
  copies made by a builder are therefore accepted whatever their names.
- Side conditions of open axiom instances (T3's ``x ≠ C``, the templates
  of R2 and R3) travel with every equation derived from them; an
  Instantiation step re-checks them on the substituted terms.
- ``check_proof`` never raises.  Any exception while validating a step is
  reported as a failure of that step.
"""
from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace

from sfm1.proofs.model import AXIOMS, AxiomId, Proof, ProofStep, Rule
from sfm1.terms import (
    EPS,
    ZERO,
    Const,
    Environment,
    One,
    Prefix,
    Sum,
    Term,
    Var,
    Zero,
    direct_constants,
    free_vars,
    is_guarded,
    og,
    render,
    substitute,
    well_sorted,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        where = f"step {self.step}: " if self.step is not None else ""
        return f"invalid: {where}{self.reason}"


class StepError(Exception):
    """A step does not follow from its premises."""


# ---------------------------------------------------------------------------
# Substitution instances
# ---------------------------------------------------------------------------

class Matcher:
    """Decides whether a term is an instance ``pattern[rho]`` up to copy naming."""

    def __init__(self, env: Environment) -> None:
        self.env = env
        self._fv: dict[str, frozenset[str]] = {}

    def const_vars(self, name: str) -> frozenset[str]:
        cached = self._fv.get(name)
        if cached is None:
            cached = frozenset(free_vars(Const(name), self.env))
            self._fv[name] = cached
        return cached

    def matches(self, pattern: Term, actual: Term, rho: Mapping[str, Term]) -> bool:
        return self._match(pattern, actual, dict(rho), set())

    def _match(
        self,
        pat: Term,
        act: Term,
        rho: Mapping[str, Term],
        assumed: set[tuple[str, str, tuple[tuple[str, Term], ...]]],
    ) -> bool:
        if isinstance(pat, Var):
            if pat.name in rho:
                return self._match(rho[pat.name], act, {}, assumed)
            return act == pat
        if isinstance(pat, (One, Zero)):
            return act == pat
        if isinstance(pat, Prefix):
            return (
                isinstance(act, Prefix)
                and act.label == pat.label
                and self._match(pat.body, act.body, rho, assumed)
            )
        if isinstance(pat, Sum):
            return (
                isinstance(act, Sum)
                and self._match(pat.left, act.left, rho, assumed)
                and self._match(pat.right, act.right, rho, assumed)
            )
        if isinstance(pat, Const):
            if not isinstance(act, Const):
                return False
            relevant = self.const_vars(pat.name) if pat.name in self.env else frozenset()
            rel = {x: v for x, v in rho.items() if x in relevant and v != Var(x)}
            if not rel and pat.name == act.name:
                return True
            key = (pat.name, act.name, tuple(sorted(rel.items(), key=lambda item: item[0])))
            if key in assumed:
                return True
            if pat.name not in self.env or act.name not in self.env:
                return False
            assumed.add(key)
            return self._match(self.env[pat.name], self.env[act.name], rel, assumed)
        return False


# ---------------------------------------------------------------------------
# Side conditions carried through derivations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SideCondition:
    """
    A side condition of an axiom instance that an open equation still owes.

    T3 records the variable standing for its ``x``; R2 and R3 record their
    template and bound variable.  Each derived step carries the conditions
    of its premises, and an Instantiation re-establishes them for the
    substituted terms.
    """

    axiom: AxiomId
    term: Term
    var: str | None = None
    env: Environment | None = field(default=None, compare=False)

    def free(self, env: Environment) -> set[str]:
        return free_vars(self.term, self.env or env) - {self.var}

    def instantiate(self, sigma: Mapping[str, Term], env: Environment) -> SideCondition | None:
        """The condition owed by the instance under *sigma*; ``None`` once discharged."""
        if self.axiom is AxiomId.T3:
            value = sigma.get(self.term.name, self.term)
            _require(not isinstance(value, Const), "T3 is not applicable to a constant")
            return replace(self, term=value) if isinstance(value, Var) else None
        scope = self.env or env
        rho = {x: v for x, v in sigma.items() if x != self.var and x in self.free(scope)}
        if not rho:
            return self
        merged = {**env, **scope}
        term, copied = substitute(self.term, rho, merged)
        _require(is_guarded(term), "instantiated template is not guarded")
        if self.axiom is AxiomId.R2:
            _require(og(term, copied), "instantiated template is not observationally guarded")
        return SideCondition(self.axiom, term, self.var, copied)


def _distinct(conditions: Iterable[SideCondition]) -> tuple[SideCondition, ...]:
    unique = {(c.axiom, c.term, c.var, id(c.env)): c for c in conditions}
    return tuple(unique.values())


# ---------------------------------------------------------------------------
# Step validation
# ---------------------------------------------------------------------------

def _require(condition: bool, reason: str) -> None:
    if not condition:
        raise StepError(reason)


def _term_binding(step: ProofStep, key: str) -> Term:
    value = step.bindings.get(key)
    if not isinstance(value, Term):
        raise StepError(f"missing term binding {key!r}")
    return value


def _var_binding(step: ProofStep) -> str:
    value = step.bindings.get("var")
    if not isinstance(value, Var):
        raise StepError("missing variable binding 'var'")
    return value.name


def _substitution(step: ProofStep) -> dict[str, Term]:
    sigma: dict[str, Term] = {}
    for key, value in step.bindings.items():
        _require(key.startswith("subst.") and isinstance(value, Term), f"bad binding {key!r}")
        sigma[key.removeprefix("subst.")] = value
    return sigma


class _Checker:
    def __init__(self, proof: Proof) -> None:
        self.proof = proof
        self.env: dict[str, Term] = dict(proof.env0)
        self.steps: list[ProofStep] = []
        self.conditions: list[tuple[SideCondition, ...]] = []

    @property
    def matcher(self) -> Matcher:
        return Matcher(self.env)

    def premise(self, step: ProofStep, n: int) -> list[ProofStep]:
        _require(len(step.premises) == n, f"{step.rule.value} takes {n} premise(s)")
        found = []
        for k in step.premises:
            _require(0 <= k < step.index, f"premise {k} is not an earlier step")
            found.append(self.steps[k])
        return found

    def introduce(self, step: ProofStep) -> None:
        for name, _ in step.introduced:
            _require(name not in self.env, f"constant {name} is defined twice")
        self.env.update(step.introduced)
        for name, body in step.introduced:
            _require(is_guarded(body), f"body of {name} is not guarded")
            _require(well_sorted(body), f"body of {name} is not well sorted")
            for used in direct_constants(body):
                _require(used in self.env, f"body of {name} uses undefined {used}")

    def judgment(self, step: ProofStep) -> None:
        for side in (step.lhs, step.rhs):
            _require(well_sorted(side), f"{render(side)} violates the sorts")
            for used in direct_constants(side):
                _require(used in self.env, f"undefined constant {used}")

    def check(self, step: ProofStep) -> None:
        self.introduce(step)
        self.judgment(step)
        if step.rule is not Rule.AXIOM:
            _require(step.axiom is None, "only axiom steps name an axiom")
        handler = getattr(self, f"_{step.rule.name.lower()}")
        handler(step)
        owed = self.carried(step)
        self.steps.append(step)
        self.conditions.append(owed)

    def carried(self, step: ProofStep) -> tuple[SideCondition, ...]:
        """Side conditions the conclusion of *step* still owes."""
        inherited = [c for k in step.premises for c in self.conditions[k]]
        if step.rule is Rule.INSTANTIATION:
            sigma = _substitution(step)
            inherited = [n for c in inherited if (n := c.instantiate(sigma, self.env)) is not None]
        elif step.rule is Rule.RECURSION:
            x = _var_binding(step)
            inherited = [c for c in inherited if x not in c.free(self.env)]
        elif step.rule is Rule.AXIOM:
            inherited.extend(self._owed(step))
        return _distinct(inherited)

    def _owed(self, step: ProofStep) -> list[SideCondition]:
        if step.axiom is AxiomId.T3:
            x = step.bindings["x"]
            return [SideCondition(AxiomId.T3, x)] if isinstance(x, Var) else []
        if step.axiom in (AxiomId.R2, AxiomId.R3):
            condition = SideCondition(step.axiom, _term_binding(step, "template"), _var_binding(step))
            return [condition] if condition.free(self.env) else []
        return []

    # --- Deduction rules ---

    def _reflexivity(self, step: ProofStep) -> None:
        self.premise(step, 0)
        _require(step.lhs == step.rhs, "sides differ")

    def _symmetry(self, step: ProofStep) -> None:
        (k,) = self.premise(step, 1)
        _require(step.lhs == k.rhs and step.rhs == k.lhs, "not the premise reversed")

    def _transitivity(self, step: ProofStep) -> None:
        k1, k2 = self.premise(step, 2)
        _require(k1.rhs == k2.lhs, "premises do not chain")
        _require(step.lhs == k1.lhs and step.rhs == k2.rhs, "endpoints differ from premises")

    def _substitutivity(self, step: ProofStep) -> None:
        (k,) = self.premise(step, 1)
        position = step.bindings.get("position")
        lhs, rhs = step.lhs, step.rhs
        if position == "body":
            _require(
                isinstance(lhs, Prefix) and isinstance(rhs, Prefix) and lhs.label == rhs.label,
                "not a prefix context",
            )
            _require(lhs.body == k.lhs and rhs.body == k.rhs, "context does not hold the premise")
        elif position in ("left", "right"):
            _require(isinstance(lhs, Sum) and isinstance(rhs, Sum), "not a choice context")
            hole, other = ("left", "right") if position == "left" else ("right", "left")
            _require(
                getattr(lhs, hole) == k.lhs and getattr(rhs, hole) == k.rhs,
                "context does not hold the premise",
            )
            _require(getattr(lhs, other) == getattr(rhs, other), "context differs")
        else:
            raise StepError(f"unknown position {position!r}")

    def _recursion(self, step: ProofStep) -> None:
        (k,) = self.premise(step, 1)
        x = _var_binding(step)
        _require(is_guarded(k.lhs) and is_guarded(k.rhs), "premise sides are not guarded")
        _require(isinstance(step.lhs, Const) and isinstance(step.rhs, Const), "sides are not constants")
        m = self.matcher
        _require(m.matches(k.lhs, self.env[step.lhs.name], {x: step.lhs}), "left constant does not solve the premise")
        _require(m.matches(k.rhs, self.env[step.rhs.name], {x: step.rhs}), "right constant does not solve the premise")

    def _instantiation(self, step: ProofStep) -> None:
        (k,) = self.premise(step, 1)
        sigma = _substitution(step)
        m = self.matcher
        _require(m.matches(k.lhs, step.lhs, sigma), "left side is not an instance")
        _require(m.matches(k.rhs, step.rhs, sigma), "right side is not an instance")

    def _axiom(self, step: ProofStep) -> None:
        _require(step.axiom is not None, "axiom step without an axiom")
        _require(
            step.axiom in AXIOMS[self.proof.axiom_set],
            f"{step.axiom.value} is not in {self.proof.axiom_set.value}",
        )
        if step.axiom not in (AxiomId.R2, AxiomId.R2P):
            self.premise(step, 0)
        _AXIOM_CHECKS[step.axiom](self, step)

    # --- Axioms ---

    def _a1(self, step: ProofStep) -> None:
        x, y, z = (_term_binding(step, v) for v in "xyz")
        _require(step.lhs == Sum(x, Sum(y, z)) and step.rhs == Sum(Sum(x, y), z), "not an A1 instance")

    def _a2(self, step: ProofStep) -> None:
        x, y = (_term_binding(step, v) for v in "xy")
        _require(step.lhs == Sum(x, y) and step.rhs == Sum(y, x), "not an A2 instance")

    def _a3(self, step: ProofStep) -> None:
        x = _term_binding(step, "x")
        _require(step.lhs == Sum(x, ZERO) and step.rhs == x, "not an A3 instance")

    def _a4(self, step: ProofStep) -> None:
        x = _term_binding(step, "x")
        _require(step.lhs == Sum(x, x) and step.rhs == x, "not an A4 instance")

    def _t1(self, step: ProofStep) -> None:
        _require(
            isinstance(step.lhs, Prefix) and step.lhs.body == ZERO and step.rhs == ZERO,
            "not a T1 instance",
        )

    def _t2(self, step: ProofStep) -> None:
        x, y = (_term_binding(step, v) for v in "xy")
        lhs = step.lhs
        _require(isinstance(lhs, Prefix) and lhs.body == Sum(x, y), "not a T2 instance")
        _require(step.rhs == Sum(Prefix(lhs.label, x), Prefix(lhs.label, y)), "not a T2 instance")

    def _t3(self, step: ProofStep) -> None:
        x = _term_binding(step, "x")
        _require(not isinstance(x, Const), "T3 is not applicable to a constant")
        _require(step.lhs == Prefix(EPS, x) and step.rhs == x, "not a T3 instance")

    def _r1(self, step: ProofStep) -> None:
        _require(isinstance(step.lhs, Const), "R1 unfolds a constant")
        _require(self.env[step.lhs.name] == step.rhs, "right side is not the body")

    def _fold(self, step: ProofStep, observational: bool) -> None:
        (k,) = self.premise(step, 1)
        template = _term_binding(step, "template")
        x = _var_binding(step)
        _require(is_guarded(template), "template is not guarded")
        if observational:
            _require(og(template, self.env), "template is not observationally guarded")
        _require(isinstance(step.lhs, Const), "folded side is not a constant")
        _require(k.lhs == step.rhs, "premise does not concern the right side")
        m = self.matcher
        _require(m.matches(template, k.rhs, {x: step.rhs}), "right side does not solve the template")
        _require(m.matches(template, self.env[step.lhs.name], {x: step.lhs}), "constant is not defined by the template")

    def _r2(self, step: ProofStep) -> None:
        self._fold(step, observational=True)

    def _r2p(self, step: ProofStep) -> None:
        self._fold(step, observational=False)

    def _r3(self, step: ProofStep) -> None:
        template = _term_binding(step, "template")
        x = _var_binding(step)
        _require(is_guarded(template), "template is not guarded")
        _require(isinstance(step.lhs, Const) and isinstance(step.rhs, Const), "sides are not constants")
        m = self.matcher
        looped = Sum(Prefix(EPS, Var(x)), template)
        _require(m.matches(looped, self.env[step.lhs.name], {x: step.lhs}), "left constant has no excisable loop")
        _require(m.matches(template, self.env[step.rhs.name], {x: step.rhs}), "right constant is not the excised body")


_AXIOM_CHECKS = {
    AxiomId.A1: _Checker._a1,
    AxiomId.A2: _Checker._a2,
    AxiomId.A3: _Checker._a3,
    AxiomId.A4: _Checker._a4,
    AxiomId.T1: _Checker._t1,
    AxiomId.T2: _Checker._t2,
    AxiomId.T3: _Checker._t3,
    AxiomId.R1: _Checker._r1,
    AxiomId.R2: _Checker._r2,
    AxiomId.R2P: _Checker._r2p,
    AxiomId.R3: _Checker._r3,
}


def check_proof(proof: Proof) -> CheckResult:
    """Re-validate every step of *proof*; the result is falsy on the first failure."""
    if not proof.steps:
        return CheckResult(False, None, "empty proof")
    checker = _Checker(proof)
    for position, step in enumerate(proof.steps):
        try:
            _require(step.index == position, f"step is numbered {step.index}")
            checker.check(step)
        except Exception as exc:  # noqa: BLE001
            reason = str(exc) if not isinstance(exc, KeyError) else f"undefined constant {exc}"
            logger.info("proof rejected at step %d: %s", position, reason)
            return CheckResult(False, position, reason)
    if dict(proof.env_n) != checker.env:
        return CheckResult(False, None, "final environment does not match the introduced constants")
    logger.debug("proof of %d steps accepted", len(proof.steps))
    return CheckResult(True)
