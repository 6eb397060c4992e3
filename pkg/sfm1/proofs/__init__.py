# Proofs package.
#
# Equational proofs over SFM1 terms and the procedures that build them:
#
#   model        : axioms, rules, proof steps, proofs and their JSON form
#   checker      : independent step-by-step validation of a proof
#   builder      : per-query proof construction: primitive steps,
#                   ACI normalisation, congruence over substitutions
#   solutions    : unique-solution elimination (folding a system)
#   normal_forms : unfolding, normal form, ε-free and deterministic
#                   normal forms, equality of deterministic forms
#   guarding     : removal of ε-cycles into an observationally guarded
#                   system (uses the excision axiom)
#   equivalence  : the complete pipeline deciding and proving p = q
#
# Every procedure takes or creates a ProofBuilder, which owns the
# per-query environment, copy table and fresh-name counter; the public
# wrappers return immutable Process/Proof values.
from sfm1.proofs.checker import CheckResult, check_proof
from sfm1.proofs.builder import ProofBuilder, merge_processes
from sfm1.proofs.equivalence import prove_equivalence
from sfm1.proofs.guarding import to_og
from sfm1.proofs.model import AxiomId, AxiomSet, Proof, ProofStep, Rule
from sfm1.proofs.normal_forms import (
    prove_det_equal,
    prove_unfold,
    to_deterministic,
    to_eps_free,
    to_normal_form,
)
from sfm1.proofs.solutions import unique_solution

__all__ = [
    "AxiomId",
    "AxiomSet",
    "CheckResult",
    "ProofBuilder",
    "Proof",
    "ProofStep",
    "Rule",
    "check_proof",
    "merge_processes",
    "prove_det_equal",
    "prove_equivalence",
    "prove_unfold",
    "to_deterministic",
    "to_eps_free",
    "to_normal_form",
    "to_og",
    "unique_solution",
]
