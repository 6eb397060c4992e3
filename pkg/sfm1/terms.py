"""
SFM1 terms: abstract syntax, text syntax, syntactic predicates and
capture-free substitution.

Design notes
------------
- Terms are frozen dataclasses; structural equality is the state identity
  used by the semantics, so no associativity or commutativity is ever
  applied implicitly.
- An *environment* is a mapping from constant names to defining bodies.
  Bodies are *guarded*: never a bare constant or variable, and no sum
  operand is a bare constant.  Variables may appear as sum operands in
  open terms (they range over guarded processes).
- Substituting into a constant whose body mentions a substituted variable
  yields a fresh *copy* of the constant.  Copies are memoised in a
  :class:`CopyTable` by (origin, substitution restricted to the origin's
  free variables), and copying a copy composes the substitutions, so
  ``t[r1][r2]`` and ``t[r2 . r1]`` are the same term within one table.
- Generated names are ``<base>%<n>``; ``%`` never occurs in a name written
  by hand, so generated names cannot collide with user constants.
"""
from __future__ import annotations

import logging
import re
from collections import deque
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from sfm1.config import settings
from sfm1.exceptions import ParseError, SortViolation, UndefinedConstant

logger = logging.getLogger(__name__)

EPS = "eps"


# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------

class Term:
    """Base class of the six term shapes."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class One(Term):
    pass


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class Prefix(Term):
    label: str
    body: Term


@dataclass(frozen=True)
class Sum(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Const(Term):
    name: str


@dataclass(frozen=True)
class Var(Term):
    name: str


ONE = One()
ZERO = Zero()

Environment = Mapping[str, Term]


@dataclass(frozen=True)
class Process:
    """A root term together with the system of equations it lives in."""

    root: Term
    env: Environment = field(default_factory=dict)
    vars: frozenset[str] = frozenset()

    @classmethod
    def of(cls, root: Term, env: Environment) -> "Process":
        names = free_vars(root, env)
        for body in env.values():
            names |= free_vars(body, env)
        return cls(root=root, env=MappingProxyType(dict(env)), vars=frozenset(names))

    @property
    def closed(self) -> bool:
        return not self.vars

    def body(self, name: str) -> Term:
        return lookup(self.env, name)

    def restricted(self) -> "Process":
        """The same process keeping only the constants reachable from the root."""
        names = constants_in_order(self.root, self.env)
        return Process.of(self.root, {n: self.env[n] for n in names if n in self.env})


def lookup(env: Environment, name: str) -> Term:
    try:
        return env[name]
    except KeyError:
        raise UndefinedConstant(name) from None


def summands(t: Term) -> list[Term]:
    """Leaves of the sum tree rooted at *t*, left to right."""
    if isinstance(t, Sum):
        return summands(t.left) + summands(t.right)
    return [t]


def sum_of(terms: Iterable[Term]) -> Term:
    """Left-associated sum; the empty sum is ``0``."""
    result: Term | None = None
    for t in terms:
        result = t if result is None else Sum(result, t)
    return ZERO if result is None else result


def subterm(t: Term, path: Iterable[str]) -> Term:
    for step in path:
        if step == "body" and isinstance(t, Prefix):
            t = t.body
        elif step == "left" and isinstance(t, Sum):
            t = t.left
        elif step == "right" and isinstance(t, Sum):
            t = t.right
        else:
            raise ValueError(f"no {step!r} position in {render(t)}")
    return t


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render(t: Term) -> str:
    if isinstance(t, One):
        return "1"
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Var):
        return f"${t.name}"
    if isinstance(t, Prefix):
        inner = render(t.body)
        if isinstance(t.body, Sum):
            inner = f"({inner})"
        return f"{t.label}.{inner}"
    if isinstance(t, Sum):
        right = render(t.right)
        if isinstance(t.right, Sum):
            right = f"({right})"
        return f"{render(t.left)} + {right}"
    raise TypeError(f"not a term: {t!r}")


def render_system(process: Process) -> str:
    """
    Text form of *process*: the root's definition first (or a ``root``
    directive when the root is not a constant), then every reachable
    constant in breadth-first order.
    """
    lines: list[str] = []
    if not isinstance(process.root, Const):
        lines.append(f"root {render(process.root)}")
    for name in constants_in_order(process.root, process.env):
        if name in process.env:
            lines.append(f"{name} := {render(process.env[name])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r]+)
    | (?P<assign>:=)
    | (?P<const>[A-Z][A-Za-z0-9_]*(?:%\d+)?(?:\{(?:\d+(?:,\d+)*)?\})?)
    | (?P<var>\$[A-Za-z_][A-Za-z0-9_]*(?:%\d+)?)
    | (?P<symbol>[a-z][A-Za-z0-9_]*)
    | (?P<literal>[01])
    | (?P<punct>[+.()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int


def _tokenize(text: str, line: int, offset: int = 0) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, offset + pos + 1)
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), offset + pos + 1))
        pos = m.end()
    tokens.append(_Token("end", "", offset + len(text) + 1))
    return tokens


class _Parser:
    """
    LL(1) recursive descent over one line::

        expr := term ("+" term)*
        term := symbol "." term | atom
        atom := "0" | "1" | Const | $var | "(" expr ")"
    """

    def __init__(self, tokens: list[_Token], line: int) -> None:
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.peek().column)

    def expect(self, text: str) -> None:
        if self.peek().text != text:
            found = self.peek().text or "end of line"
            raise self.fail(f"expected {text!r}, found {found!r}")
        self.advance()

    def expr(self) -> Term:
        result = self.term()
        while self.peek().text == "+":
            self.advance()
            result = Sum(result, self.term())
        return result

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "symbol":
            self.advance()
            self.expect(".")
            return Prefix(tok.text, self.term())
        return self.atom()

    def atom(self) -> Term:
        tok = self.advance()
        if tok.kind == "literal":
            return ONE if tok.text == "1" else ZERO
        if tok.kind == "const":
            return Const(tok.text)
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        self.pos -= 1
        raise self.fail(f"unexpected {tok.text or 'end of line'!r}")

    def finish(self) -> None:
        if self.peek().kind != "end":
            raise self.fail(f"unexpected {self.peek().text!r}")


def _parse_expr(text: str, line: int, offset: int = 0) -> Term:
    parser = _Parser(_tokenize(text, line, offset), line)
    term = parser.expr()
    parser.finish()
    return term


def parse_expression(text: str) -> Term:
    """Parse a single expression without any sort checks."""
    return _parse_expr(text.strip(), 1)


def parse_term(text: str) -> Term:
    """Parse a single expression; sum operands must not be bare constants."""
    term = _parse_expr(text.strip(), 1)
    try:
        check_sorts(term)
    except SortViolation as exc:
        raise ParseError(str(exc), 1, 1) from None
    return term


_DEF_RE = re.compile(r"^\s*(?P<name>\S+)\s*:=(?P<body>.*)$")
_CONST_RE = re.compile(r"[A-Z][A-Za-z0-9_]*(?:%\d+)?(?:\{(?:\d+(?:,\d+)*)?\})?")


def parse_system(text: str) -> Process:
    """
    Parse a system of equations.

    One ``Name := body`` definition per line, ``#`` starts a comment, and
    an optional ``root <expr>`` line designates the root; otherwise the
    first definition is the root.  Undefined constants, non-guarded bodies
    and sort violations are reported with their line numbers.
    """
    defs: dict[str, Term] = {}
    lines_of: dict[str, int] = {}
    root: Term | None = None
    root_line = 0
    first: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped == "root" or stripped.startswith("root "):
            if root is not None:
                raise ParseError("duplicate root directive", lineno, 1)
            offset = line.index("root") + 4
            root = _parse_expr(line[offset:], lineno, offset)
            root_line = lineno
            continue
        m = _DEF_RE.match(line)
        if m is None:
            raise ParseError("expected 'Name := body' or 'root <expr>'", lineno, 1)
        name = m.group("name")
        if _CONST_RE.fullmatch(name) is None:
            raise ParseError(f"invalid constant name {name!r}", lineno, line.index(name) + 1)
        if name in defs:
            raise ParseError(f"constant {name} defined twice", lineno, 1)
        defs[name] = _parse_expr(m.group("body"), lineno, m.start("body"))
        lines_of[name] = lineno
        first = first or name

    if root is None:
        if first is None:
            raise ParseError("empty system: no definitions and no root", 1, 1)
        root = Const(first)
        root_line = lines_of[first]

    for name, body in defs.items():
        where = lines_of[name]
        if not is_guarded(body):
            raise ParseError(f"body of {name} must be a guarded process", where, 1)
        _check_line(body, defs, where)
    _check_line(root, defs, root_line)
    return Process.of(root, defs)


def _check_line(term: Term, defs: Mapping[str, Term], line: int) -> None:
    try:
        check_sorts(term)
    except SortViolation as exc:
        raise ParseError(str(exc), line, 1) from None
    for name in direct_constants(term):
        if name not in defs:
            raise ParseError(f"undefined constant {name}", line, 1)


def direct_constants(t: Term) -> Iterator[str]:
    if isinstance(t, Const):
        yield t.name
    elif isinstance(t, Prefix):
        yield from direct_constants(t.body)
    elif isinstance(t, Sum):
        yield from direct_constants(t.left)
        yield from direct_constants(t.right)


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------

def is_guarded(t: Term) -> bool:
    """Category *s*: no bare constant or variable at top level of a sum."""
    if isinstance(t, (One, Zero, Prefix)):
        return True
    if isinstance(t, Sum):
        return is_guarded(t.left) and is_guarded(t.right)
    return False


def check_sorts(t: Term) -> None:
    """Raise :class:`SortViolation` if a constant occurs as a sum operand."""
    if isinstance(t, Prefix):
        check_sorts(t.body)
    elif isinstance(t, Sum):
        for operand in (t.left, t.right):
            if isinstance(operand, Const):
                raise SortViolation(
                    f"constant {operand.name} cannot be a summand in {render(t)}"
                )
            check_sorts(operand)


def well_sorted(t: Term) -> bool:
    try:
        check_sorts(t)
    except SortViolation:
        return False
    return True


# ---------------------------------------------------------------------------
# Constants and variables
# ---------------------------------------------------------------------------

def consts(p: Term, env: Environment) -> set[str]:
    """The set of constants reachable from *p*, through bodies (visited set)."""
    seen: set[str] = set()

    def delta(t: Term) -> None:
        if isinstance(t, Prefix):
            delta(t.body)
        elif isinstance(t, Sum):
            delta(t.left)
            delta(t.right)
        elif isinstance(t, Const) and t.name not in seen:
            seen.add(t.name)
            if t.name in env:
                delta(env[t.name])

    delta(p)
    return seen


def constants_in_order(p: Term, env: Environment) -> list[str]:
    """Reachable constants in breadth-first order of first occurrence."""
    order: list[str] = []
    seen: set[str] = set()
    queue = deque([p])
    while queue:
        for name in direct_constants(queue.popleft()):
            if name not in seen:
                seen.add(name)
                order.append(name)
                if name in env:
                    queue.append(env[name])
    return order


def free_vars(p: Term, env: Environment) -> set[str]:
    """Variables occurring in *p* or in the body of any constant it reaches."""
    found: set[str] = set()
    seen: set[str] = set()
    stack = [p]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            found.add(t.name)
        elif isinstance(t, Prefix):
            stack.append(t.body)
        elif isinstance(t, Sum):
            stack.extend((t.left, t.right))
        elif isinstance(t, Const) and t.name not in seen:
            seen.add(t.name)
            if t.name in env:
                stack.append(env[t.name])
    return found


def alphabet(p: Term, env: Environment) -> set[str]:
    """Non-ε labels occurring in *p* and the bodies it reaches."""
    labels: set[str] = set()
    seen: set[str] = set()
    stack = [p]
    while stack:
        t = stack.pop()
        if isinstance(t, Prefix):
            if t.label != EPS:
                labels.add(t.label)
            stack.append(t.body)
        elif isinstance(t, Sum):
            stack.extend((t.left, t.right))
        elif isinstance(t, Const) and t.name not in seen:
            seen.add(t.name)
            if t.name in env:
                stack.append(env[t.name])
    return labels


# ---------------------------------------------------------------------------
# Predicates and measures
# ---------------------------------------------------------------------------

def is_final(p: Term, env: Environment) -> bool:
    """Least predicate with 1 final, sums final if an operand is, C final if its body is."""
    seen: set[str] = set()

    def down(t: Term) -> bool:
        if isinstance(t, One):
            return True
        if isinstance(t, Sum):
            return down(t.left) or down(t.right)
        if isinstance(t, Const):
            if t.name in seen:
                return False
            seen.add(t.name)
            return down(lookup(env, t.name))
        return False

    return down(p)


def _unguarded(t: Term) -> tuple[list[str], bool]:
    """Constants and whether a variable are reached through sums and ε-prefixes only."""
    names: list[str] = []
    has_var = False
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Sum):
            stack.extend((s.right, s.left))
        elif isinstance(s, Prefix) and s.label == EPS:
            stack.append(s.body)
        elif isinstance(s, Const):
            names.append(s.name)
        elif isinstance(s, Var):
            has_var = True
    return names, has_var


def og(p: Term, env: Environment) -> bool:
    """
    Observational guardedness.

    ``og(a.p)`` holds for every letter *a*; ``og(ε.p)`` is ``og(p)``; sums
    are conjunctions; a variable is never guarded; a constant is guarded
    iff its body is and unfolding it never re-enters a constant that is
    still being unfolded through ε-prefixes and sums alone.
    """
    names, has_var = _unguarded(p)
    if has_var:
        return False
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(name: str) -> bool:
        mark = state.get(name)
        if mark == 1:
            return False
        if mark == 2:
            return True
        state[name] = 1
        inner, var = _unguarded(lookup(env, name))
        if var or not all(visit(n) for n in inner):
            return False
        state[name] = 2
        return True

    return all(visit(n) for n in names)


def is_og_system(p: Term, env: Environment) -> bool:
    """*p* and every constant it reaches are observationally guarded."""
    return og(p, env) and all(og(Const(n), env) for n in consts(p, env))


def nf(p: Term, env: Environment) -> bool:
    """Normal form: every prefix body is a constant, and so recursively for bodies."""
    seen: set[str] = set()

    def check(t: Term) -> bool:
        if isinstance(t, (One, Zero)):
            return True
        if isinstance(t, Prefix):
            return isinstance(t.body, Const) and check(t.body)
        if isinstance(t, Sum):
            return check(t.left) and check(t.right)
        if isinstance(t, Const):
            if t.name in seen:
                return True
            seen.add(t.name)
            return check(lookup(env, t.name))
        return False

    return check(p)


def length(p: Term, env: Environment) -> int:
    """
    Length of the ε-computations leading to an unguarded variable.

    A recursive re-entry of a constant that is being measured counts as
    its own variable (1); each other constant contributes once.
    """
    state: dict[str, int] = {}

    def measure(t: Term) -> int:
        if isinstance(t, Var):
            return 1
        if isinstance(t, Prefix):
            if t.label != EPS:
                return 0
            inner = measure(t.body)
            return 0 if inner == 0 else 1 + inner
        if isinstance(t, Sum):
            return measure(t.left) + measure(t.right)
        if isinstance(t, Const):
            mark = state.get(t.name)
            if mark == 1:
                return 1
            if mark == 2:
                return 0
            state[t.name] = 1
            value = measure(lookup(env, t.name))
            state[t.name] = 2
            return value
        return 0

    return measure(p)


def count_unguarded(x: str, p: Term, env: Environment) -> int:
    """Occurrences of ``$x`` reachable through ε-prefixes, sums and constant bodies."""
    seen: set[str] = set()

    def count(t: Term) -> int:
        if isinstance(t, Var):
            return 1 if t.name == x else 0
        if isinstance(t, Prefix):
            return count(t.body) if t.label == EPS else 0
        if isinstance(t, Sum):
            return count(t.left) + count(t.right)
        if isinstance(t, Const) and t.name not in seen:
            seen.add(t.name)
            return count(lookup(env, t.name))
        return 0

    return count(p)


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------

def base_name(name: str) -> str:
    """``D%3{1,2}`` -> ``D``."""
    return name.split("%", 1)[0].split("{", 1)[0]


class FreshNames:
    """Per-query monotone counter producing ``<base>%<n>`` names."""

    def __init__(self, taken: Callable[[str], bool], start: int | None = None) -> None:
        self._taken = taken
        self._next = settings.SFM1_SEED if start is None else start
        self._reserved: set[str] = set()

    def _free(self, name: str) -> bool:
        return name not in self._reserved and not self._taken(name)

    def fresh(self, base: str) -> str:
        while True:
            name = f"{base}%{self._next}"
            self._next += 1
            if self._free(name):
                self._reserved.add(name)
                return name

    def family(self, base: str, names: Iterable[str]) -> str:
        """A prefix *P* such that no existing name starts with ``P{``."""
        existing = list(names)
        candidate = base
        while any(n.startswith(candidate + "{") for n in existing):
            candidate = f"{base}%{self._next}"
            self._next += 1
        return candidate

    def reserve(self, name: str) -> None:
        self._reserved.add(name)


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

SubstKey = tuple[tuple[str, Term], ...]


def _key(rho: Mapping[str, Term]) -> SubstKey:
    return tuple(sorted(rho.items(), key=lambda item: item[0]))


class CopyTable:
    """
    Fresh copies of constants produced by substitution.

    *env* is extended in place with every copy.  ``provenance[copy]`` is
    the pair (origin, substitution) the copy was made from; origins are
    never copies themselves.
    """

    def __init__(self, env: dict[str, Term], names: FreshNames | None = None) -> None:
        self.env = env
        self.names = names or FreshNames(lambda n: n in env)
        self.provenance: dict[str, tuple[str, dict[str, Term]]] = {}
        self._copies: dict[tuple[str, SubstKey], str] = {}
        self._fv: dict[str, frozenset[str]] = {}
        self.created: list[str] = []

    def const_vars(self, name: str) -> frozenset[str]:
        cached = self._fv.get(name)
        if cached is None:
            cached = frozenset(free_vars(Const(name), self.env))
            self._fv[name] = cached
        return cached

    def term_vars(self, t: Term) -> set[str]:
        return free_vars(t, self.env)

    def forget_vars(self) -> None:
        """Drop cached free variables; call after defining a constant by hand."""
        self._fv.clear()

    def substitute(self, t: Term, rho: Mapping[str, Term]) -> Term:
        rho = {x: v for x, v in rho.items() if v != Var(x)}
        if not rho:
            return t
        return self._apply(t, rho)

    def _apply(self, t: Term, rho: Mapping[str, Term]) -> Term:
        if isinstance(t, Var):
            return rho.get(t.name, t)
        if isinstance(t, Prefix):
            body = self._apply(t.body, rho)
            return t if body is t.body else Prefix(t.label, body)
        if isinstance(t, Sum):
            result = Sum(self._apply(t.left, rho), self._apply(t.right, rho))
            for operand in (result.left, result.right):
                if isinstance(operand, Const):
                    raise SortViolation(
                        f"substitution puts constant {operand.name} in a summand position"
                    )
            return result
        if isinstance(t, Const):
            return self._apply_const(t, rho)
        return t

    def _apply_const(self, c: Const, rho: Mapping[str, Term]) -> Term:
        if c.name not in self.env:
            raise UndefinedConstant(c.name)
        relevant = self.const_vars(c.name)
        if not any(x in relevant for x in rho):
            return c
        origin = self.provenance.get(c.name)
        if origin is None:
            return self.copy_of(c.name, {x: v for x, v in rho.items() if x in relevant})
        origin_name, sigma = origin
        composed: dict[str, Term] = {}
        for x in self.const_vars(origin_name):
            if x in sigma:
                composed[x] = self._apply(sigma[x], rho)
            elif x in rho:
                composed[x] = rho[x]
        return self.copy_of(origin_name, composed)

    def copy_of(self, origin: str, rho: Mapping[str, Term]) -> Term:
        """The copy of *origin* under *rho* (memoised); *origin* itself if *rho* is trivial."""
        rho = {x: v for x, v in rho.items() if v != Var(x)}
        if not rho:
            return Const(origin)
        key = (origin, _key(rho))
        name = self._copies.get(key)
        if name is not None:
            return Const(name)
        name = self.names.fresh(base_name(origin))
        self._copies[key] = name
        self.provenance[name] = (origin, dict(rho))
        body = self._apply(self.env[origin], rho)
        if not is_guarded(body):
            raise SortViolation(f"copy of {origin} would have the unguarded body {render(body)}")
        self.env[name] = body
        self.created.append(name)
        logger.debug("copy %s := %s[%s]", name, origin, _render_subst(rho))
        return Const(name)


def _render_subst(rho: Mapping[str, Term]) -> str:
    return ", ".join(f"${x} := {render(v)}" for x, v in sorted(rho.items()))


def substitute(
    p: Term,
    rho: Mapping[str, Term],
    env: Environment,
    table: CopyTable | None = None,
) -> tuple[Term, Environment]:
    """
    Replace free variables of *p* according to *rho*.

    Constants whose bodies mention a substituted variable are replaced by
    fresh copies with substituted bodies; the returned environment is
    *env* plus those copies.  Pass a shared *table* to make successive
    substitutions compose syntactically.
    """
    if table is None:
        table = CopyTable(dict(env))
    result = table.substitute(p, rho)
    if isinstance(result, Sum):
        check_sorts(result)
    return result, MappingProxyType(dict(table.env))
