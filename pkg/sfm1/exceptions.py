"""
Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`Sfm1Error`, so the CLI can map the whole family to exit code 2
with a single ``except`` clause.  ``check_proof`` is the one public entry
point that never raises: it reports failures through its return value.
"""


class Sfm1Error(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class ParseError(Sfm1Error):
    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(f"{where}{message}")


class SortViolation(Sfm1Error):
    """A constant ended up as a sum operand or as a whole body."""


class UndefinedConstant(Sfm1Error):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"constant {name!r} is not defined")


# ---------------------------------------------------------------------------
# Automata
# ---------------------------------------------------------------------------

class InvalidAutomaton(Sfm1Error):
    pass


class UnknownState(Sfm1Error):
    def __init__(self, state: str) -> None:
        self.state = state
        super().__init__(f"unknown state {state!r}")


class ForeignSymbol(Sfm1Error):
    def __init__(self, symbol: str) -> None:
        self.symbol = symbol
        super().__init__(f"symbol {symbol!r} is not in the alphabet")


class TooLarge(Sfm1Error):
    pass


# ---------------------------------------------------------------------------
# Semantics / compiler
# ---------------------------------------------------------------------------

class NotOpenOn(Sfm1Error):
    def __init__(self, var: str) -> None:
        self.var = var
        super().__init__(f"term is not open on ${var}")


class NotReduced(Sfm1Error):
    pass


# ---------------------------------------------------------------------------
# Proof procedures
# ---------------------------------------------------------------------------

class PreconditionError(Sfm1Error):
    """A proof procedure was called outside its domain."""


class NotOg(PreconditionError):
    pass


class NotNf(PreconditionError):
    pass


class NotEpsFree(PreconditionError):
    pass


class NotDeterministic(PreconditionError):
    pass


class NotClosed(PreconditionError):
    pass


class NotASolution(PreconditionError):
    pass


class NotEquivalent(PreconditionError):
    pass


class ProofConstructionError(Sfm1Error):
    """A procedure produced an inconsistent derivation."""


class EmptyProof(Sfm1Error):
    """A proof without steps has no conclusion."""


class SelfCheckFailure(Sfm1Error):
    def __init__(self, step: int | None, reason: str) -> None:
        self.step = step
        self.reason = reason
        super().__init__(f"emitted proof fails at step {step}: {reason}")
