from pydantic import BaseModel, ConfigDict, Field, RootModel


# --- Automata ---

class NfaDocument(BaseModel):
    states: list[str] = Field(min_length=1)
    alphabet: list[str] = []
    initial: str
    finals: list[str] = []
    transitions: list[tuple[str, str, str]] = []  # [src, label, dst]; label may be "eps"
    model_config = ConfigDict(extra="forbid")


# --- Proofs ---

class IntroducedConstant(BaseModel):
    name: str
    body: str


class ProofStepDocument(BaseModel):
    i: int = Field(ge=0)
    lhs: str
    rhs: str
    rule: str
    premises: list[int] = []
    axiom: str | None = None
    bindings: dict[str, str] | None = None
    introduced: list[IntroducedConstant] | None = None
    model_config = ConfigDict(extra="forbid")


class ProofDocument(RootModel[list[ProofStepDocument]]):
    pass
