"""
Proof objects.

A proof is a flat, indexed sequence of equalities; each step names the
rule that justifies it, the indices of earlier steps it depends on, the
bindings needed to re-validate it mechanically, and the fresh constants
it introduces into the environment.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType

from sfm1.exceptions import EmptyProof
from sfm1.schemas import IntroducedConstant, ProofDocument, ProofStepDocument
from sfm1.terms import Environment, Term, parse_expression, render


class AxiomId(str, Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    R1 = "R1"
    R2 = "R2"
    R2P = "R2P"
    R3 = "R3"


class Rule(str, Enum):
    REFLEXIVITY = "Reflexivity"
    SYMMETRY = "Symmetry"
    TRANSITIVITY = "Transitivity"
    SUBSTITUTIVITY = "Substitutivity"
    RECURSION = "Recursion"
    INSTANTIATION = "Instantiation"
    AXIOM = "Axiom"


class AxiomSet(str, Enum):
    B = "B"
    WG = "Wg"
    W = "W"


_CHOICE = frozenset({AxiomId.A1, AxiomId.A2, AxiomId.A3, AxiomId.A4})

AXIOMS: Mapping[AxiomSet, frozenset[AxiomId]] = MappingProxyType(
    {
        AxiomSet.B: _CHOICE | {AxiomId.R1, AxiomId.R2P},
        AxiomSet.WG: _CHOICE
        | {AxiomId.T1, AxiomId.T2, AxiomId.T3, AxiomId.R1, AxiomId.R2},
        AxiomSet.W: _CHOICE
        | {AxiomId.T1, AxiomId.T2, AxiomId.T3, AxiomId.R1, AxiomId.R2, AxiomId.R3},
    }
)

# Binding keys whose values are plain strings rather than terms.
_LITERAL_BINDINGS: frozenset[str] = frozenset({"position", "alpha"})

Binding = Term | str


def smallest_axiom_set(used: frozenset[AxiomId]) -> AxiomSet:
    """The first of B, Wg, W containing *used*; W when none does."""
    for candidate in (AxiomSet.B, AxiomSet.WG, AxiomSet.W):
        if used <= AXIOMS[candidate]:
            return candidate
    return AxiomSet.W


@dataclass(frozen=True)
class ProofStep:
    index: int
    lhs: Term
    rhs: Term
    rule: Rule
    premises: tuple[int, ...] = ()
    axiom: AxiomId | None = None
    bindings: Mapping[str, Binding] = field(default_factory=dict)
    introduced: tuple[tuple[str, Term], ...] = ()

    def __str__(self) -> str:
        why = self.axiom.value if self.axiom else self.rule.value
        refs = f" [{', '.join(map(str, self.premises))}]" if self.premises else ""
        return f"{self.index}: {render(self.lhs)} = {render(self.rhs)}  ({why}{refs})"

    def to_document(self) -> ProofStepDocument:
        return ProofStepDocument(
            i=self.index,
            lhs=render(self.lhs),
            rhs=render(self.rhs),
            rule=self.rule.value,
            premises=list(self.premises),
            axiom=self.axiom.value if self.axiom else None,
            bindings={
                key: value if isinstance(value, str) else render(value)
                for key, value in self.bindings.items()
            }
            or None,
            introduced=[
                IntroducedConstant(name=name, body=render(body))
                for name, body in self.introduced
            ]
            or None,
        )

    @classmethod
    def from_document(cls, doc: ProofStepDocument) -> "ProofStep":
        bindings: dict[str, Binding] = {}
        for key, value in (doc.bindings or {}).items():
            bindings[key] = value if key in _LITERAL_BINDINGS else parse_expression(value)
        return cls(
            index=doc.i,
            lhs=parse_expression(doc.lhs),
            rhs=parse_expression(doc.rhs),
            rule=Rule(doc.rule),
            premises=tuple(doc.premises),
            axiom=AxiomId(doc.axiom) if doc.axiom else None,
            bindings=bindings,
            introduced=tuple(
                (entry.name, parse_expression(entry.body)) for entry in doc.introduced or []
            ),
        )


@dataclass(frozen=True)
class Proof:
    axiom_set: AxiomSet
    steps: tuple[ProofStep, ...]
    env0: Environment
    env_n: Environment

    @property
    def conclusion(self) -> tuple[Term, Term]:
        if not self.steps:
            raise EmptyProof("a proof without steps has no conclusion")
        last = self.steps[-1]
        return last.lhs, last.rhs

    @property
    def axioms_used(self) -> frozenset[AxiomId]:
        return frozenset(s.axiom for s in self.steps if s.axiom is not None)

    def __len__(self) -> int:
        return len(self.steps)

    def to_json(self) -> str:
        doc = ProofDocument([s.to_document() for s in self.steps])
        return doc.model_dump_json(indent=2, exclude_none=True) + "\n"

    @classmethod
    def from_json(cls, text: str, env0: Environment) -> "Proof":
        """
        Load a proof file against the starting environment *env0*.

        The final environment is *env0* plus every introduced constant and
        the axiom set is the smallest one covering the axioms used.
        """
        steps = tuple(ProofStep.from_document(d) for d in ProofDocument.model_validate_json(text).root)
        env_n = dict(env0)
        for step in steps:
            env_n.update(step.introduced)
        used = frozenset(s.axiom for s in steps if s.axiom is not None)
        return cls(
            axiom_set=smallest_axiom_set(used),
            steps=steps,
            env0=MappingProxyType(dict(env0)),
            env_n=MappingProxyType(env_n),
        )
