"""Arithmetic expression parsing and randomized equivalence checking.

Grammar (recursive descent, left-assoc sums/products, right-assoc powers):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/' | implicit) factor)*
    factor := atom ('^' factor)?
    atom   := NUMBER | VARIABLE | '(' expr ')' | '\\frac' '{' expr '}' '{' expr '}'
            | '-' atom

Implicit multiplication binds like '*' and is triggered by juxtaposition of
a factor with a variable, an opening parenthesis, or a \\frac (``2x``,
``2(x+1)``, ``x(x+1)``). Whitespace is ignored everywhere; commas between
digits are treated as thousands separators and dropped. Number literals are
kept as exact rationals.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "ExprNode",
    "ParseError",
    "SingularityError",
    "parse_expression",
    "evaluate",
    "evaluate_exact",
    "variables",
    "expr_equivalent",
    "render",
]

# Candidate assignments are drawn from [-3, -0.1] u [0.1, 3]: bounded away
# from zero so that plain variable denominators never sit on a singularity.
SAMPLE_LOW = 0.1
SAMPLE_HIGH = 3.0
EVAL_SAMPLES = 16
SINGULARITY_RETRIES = 8
REL_TOL = 1e-9

_DENOM_EPS = 1e-12


class ParseError(ValueError):
    """Unparseable expression; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SingularityError(ArithmeticError):
    """Evaluation hit a pole, domain error, or overflow."""


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "ExprNode"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of '+', '-', '*', '/', '^'
    left: "ExprNode"
    right: "ExprNode"


ExprNode = Union[Num, Var, Neg, BinOp]


# ---------------------------------------------------------------------------
# Tokenizer


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER, IDENT, OP, FRAC, LBRACE, RBRACE, LPAREN, RPAREN, END
    text: str
    pos: int


_NUMBER_RE = re.compile(r"(?:\d[\d,]*(?:\.\d+)?|\.\d+)")
_IDENT_RE = re.compile(r"[A-Za-z]+")

# Unicode operator spellings normalized before scanning.
_CANONICAL = {"×": "*", "÷": "/", "−": "-", "⋅": "*"}


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        ch = _CANONICAL.get(ch, ch)
        if ch in "+-*/^(){}":
            kind = {
                "(": "LPAREN",
                ")": "RPAREN",
                "{": "LBRACE",
                "}": "RBRACE",
            }.get(ch, "OP")
            tokens.append(_Token(kind, ch, i))
            i += 1
            continue
        if ch == "\\":
            if source.startswith("\\frac", i):
                tokens.append(_Token("FRAC", "\\frac", i))
                i += 5
                continue
            raise ParseError(f"unsupported escape {source[i:i + 6]!r}", i)
        m = _NUMBER_RE.match(source, i)
        if m and source[i] != ",":
            text = m.group(0)
            # Trailing comma belongs to surrounding context, not the number.
            text = text.rstrip(",")
            tokens.append(_Token("NUMBER", text, i))
            i += len(text)
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            tokens.append(_Token("IDENT", m.group(0), i))
            i += m.end() - m.start()
            continue
        raise ParseError(f"unexpected character {source[i]!r}", i)
    tokens.append(_Token("END", "", n))
    return tokens


def _number_value(text: str) -> Fraction:
    return Fraction(text.replace(",", ""))


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str) -> _Token:
        token = self.peek()
        if token.kind != kind:
            raise ParseError(f"expected {kind}, found {token.text or 'end of input'!r}", token.pos)
        return self.advance()

    def parse(self) -> ExprNode:
        node = self.expr()
        tail = self.peek()
        if tail.kind != "END":
            raise ParseError(f"trailing input {tail.text!r}", tail.pos)
        return node

    def expr(self) -> ExprNode:
        node = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> ExprNode:
        node = self.factor()
        while True:
            token = self.peek()
            if token.kind == "OP" and token.text in "*/":
                self.advance()
                node = BinOp(token.text, node, self.factor())
            elif token.kind in ("IDENT", "LPAREN", "FRAC"):
                node = BinOp("*", node, self.factor())
            else:
                return node

    def factor(self) -> ExprNode:
        node = self.atom()
        token = self.peek()
        if token.kind == "OP" and token.text == "^":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def atom(self) -> ExprNode:
        token = self.peek()
        if token.kind == "NUMBER":
            self.advance()
            return Num(_number_value(token.text))
        if token.kind == "IDENT":
            self.advance()
            return Var(token.text)
        if token.kind == "LPAREN":
            self.advance()
            node = self.expr()
            self.expect("RPAREN")
            return node
        if token.kind == "FRAC":
            self.advance()
            self.expect("LBRACE")
            numerator = self.expr()
            self.expect("RBRACE")
            self.expect("LBRACE")
            denominator = self.expr()
            self.expect("RBRACE")
            return BinOp("/", numerator, denominator)
        if token.kind == "OP" and token.text == "-":
            self.advance()
            return Neg(self.atom())
        raise ParseError(f"expected a value, found {token.text or 'end of input'!r}", token.pos)


def parse_expression(source: str) -> ExprNode:
    """Parse ``source`` into an expression tree.

    Raises ParseError (with position) on malformed input.
    """
    return _Parser(_tokenize(source)).parse()


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(node: ExprNode, env: dict[str, float]) -> float:
    """Evaluate ``node`` under variable assignment ``env``.

    Raises SingularityError on division by (near) zero, fractional powers of
    negative bases, negative powers of zero, or float overflow.
    """
    try:
        value = _eval(node, env)
    except OverflowError as exc:
        raise SingularityError("overflow") from exc
    if math.isnan(value) or math.isinf(value):
        raise SingularityError("non-finite result")
    return value


def _eval(node: ExprNode, env: dict[str, float]) -> float:
    if isinstance(node, Num):
        return float(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise SingularityError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    left = _eval(node.left, env)
    if node.op == "^":
        exponent = _eval(node.right, env)
        if left == 0.0 and exponent < 0:
            raise SingularityError("zero base with negative exponent")
        if left < 0.0 and exponent != int(exponent):
            raise SingularityError("negative base with fractional exponent")
        return left ** exponent
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if abs(right) < _DENOM_EPS:
            raise SingularityError("division by zero")
        return left / right
    raise AssertionError(f"unknown operator {node.op!r}")


def evaluate_exact(node: ExprNode) -> Fraction | None:
    """Constant-fold a variable-free tree to an exact rational.

    Returns None when the tree contains variables, divides by zero, or uses
    a power that has no exact rational value.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return None
    if isinstance(node, Neg):
        inner = evaluate_exact(node.operand)
        return None if inner is None else -inner
    left = evaluate_exact(node.left)
    right = evaluate_exact(node.right)
    if left is None or right is None:
        return None
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return None if right == 0 else left / right
    if node.op == "^":
        if right.denominator != 1:
            return None
        exponent = right.numerator
        if left == 0 and exponent < 0:
            return None
        try:
            return left ** exponent
        except OverflowError:
            return None
    raise AssertionError(f"unknown operator {node.op!r}")


def variables(node: ExprNode) -> frozenset[str]:
    """The set of variable names appearing in ``node``."""
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, Neg):
        return variables(node.operand)
    return variables(node.left) | variables(node.right)


# ---------------------------------------------------------------------------
# Randomized equivalence


def _draw_assignment(names: tuple[str, ...], rng: random.Random) -> dict[str, float]:
    env = {}
    for name in names:
        magnitude = rng.uniform(SAMPLE_LOW, SAMPLE_HIGH)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        env[name] = sign * magnitude
    return env


def expr_equivalent(a: ExprNode, b: ExprNode, seed: int = 0) -> bool:
    """Decide equivalence of two trees by seeded randomized evaluation.

    The trees must share a variable set. Each of EVAL_SAMPLES assignments
    draws every variable from [-3, -0.1] u [0.1, 3]; an assignment that hits
    a singularity of either tree is redrawn up to SINGULARITY_RETRIES times.
    Exhausting the retries makes the comparison indeterminate, which is
    reported as not-equivalent. Values must agree to REL_TOL relative
    tolerance at every assignment.
    """
    names = variables(a)
    if names != variables(b):
        return False
    ordered = tuple(sorted(names))
    rng = random.Random(f"expr-equivalence/{seed}")
    for _ in range(EVAL_SAMPLES):
        for attempt in range(SINGULARITY_RETRIES + 1):
            env = _draw_assignment(ordered, rng)
            try:
                va = evaluate(a, env)
                vb = evaluate(b, env)
            except SingularityError:
                if attempt == SINGULARITY_RETRIES:
                    return False  # indeterminate: too many singular draws
                continue
            if abs(va - vb) > REL_TOL * max(1.0, abs(va)):
                return False
            break
    return True


# ---------------------------------------------------------------------------
# Rendering (used by tests and diagnostics)


def render(node: ExprNode) -> str:
    """Serialize a tree back to parseable text (fully parenthesized)."""
    if isinstance(node, Num):
        value = node.value
        if value.denominator == 1:
            return str(value.numerator)
        return f"({value.numerator}/{value.denominator})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{render(node.operand)})"
    return f"({render(node.left)}{node.op}{render(node.right)})"


def walk(node: ExprNode) -> Iterator[ExprNode]:
    """Yield every node of the tree, preorder."""
    yield node
    if isinstance(node, Neg):
        yield from walk(node.operand)
    elif isinstance(node, BinOp):
        yield from walk(node.left)
        yield from walk(node.right)
