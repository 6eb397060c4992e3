"""
Deciding ``p = q`` and proving it when it holds.

Design notes
------------
- The language check runs first, on the automata of the two inputs, so a
  distinct pair costs no proof construction and yields a shortest
  witness.
- Equivalent pairs share one builder over the merged environment.  Each
  side is reduced to a deterministic normal form over the union of both
  alphabets (og form, normal form, ε-free form, subset construction) and
  the two forms are equated; the final proof is the chain
  ``p = D_p = D_q = q``.
- Only closed processes are reduced; an open input raises ``NotClosed``.
"""
from __future__ import annotations

import logging
from functools import partial

from sfm1.automata import Distinct, Equal, EquivVerdict, language_equiv
from sfm1.proofs.builder import ProofBuilder, merge_processes
from sfm1.proofs.guarding import og_form
from sfm1.proofs.model import AxiomSet
from sfm1.proofs.normal_forms import det_equal, deterministic, eps_free, normal_form
from sfm1.semantics import denote
from sfm1.terms import Process, alphabet, render

__all__ = ["merge_processes", "prove_equivalence"]

logger = logging.getLogger(__name__)


def _reduce(b: ProofBuilder, process: Process, symbols: list[str]) -> tuple[str, int]:
    """Deterministic normal form of the root of *process* and the proof ``root = D``."""
    name, k = b.lift(process.root)
    stages = (
        og_form,
        partial(normal_form, axiom_set=AxiomSet.WG),
        eps_free,
        partial(deterministic, symbols=symbols),
    )
    for stage in stages:
        name, step = stage(b, name)
        k = b.trans(k, step)
    logger.debug("%s reduced to %s (%d steps so far)", render(process.root), name, len(b.steps))
    return name, k


def prove_equivalence(p: Process, q: Process) -> EquivVerdict:
    """
    ``Distinct(witness)`` when the languages of *p* and *q* differ, else
    ``Equal(proof)`` with a proof of ``p = q`` in W.

    When constants of *q* clash with those of *p* they are renamed (see
    :func:`merge_processes`); the conclusion then names the renamed root.
    """
    verdict = language_equiv(denote(p), denote(q))
    if isinstance(verdict, Distinct):
        logger.info("distinct on %s", verdict.word)
        return verdict

    p, q = merge_processes(p, q)
    symbols = sorted(alphabet(p.root, p.env) | alphabet(q.root, q.env))
    b = ProofBuilder(p.env, AxiomSet.W)
    left, k_p = _reduce(b, p, symbols)
    right, k_q = _reduce(b, q, symbols)
    logger.info("equating deterministic forms %s and %s", left, right)
    b.conclude(b.chain(k_p, det_equal(b, left, right, symbols), b.sym(k_q)))
    proof = b.build()
    logger.info("equal: proof of %d steps using %s", len(proof), proof.axiom_set.value)
    return Equal(proof)
