"""A tiny arithmetic language for closed-form field definitions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ['^' exponent]
    exponent:= (NUMBER | '(' expr ')') ['^' exponent]
    atom    := NUMBER | 'x1' | 'x2' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``, and is
right-associative.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import BonnetlabError
from .fieldcore import Grid2, ScalarField2

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "sgn")
VARIABLES = ("x1", "x2")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprSyntaxError(BonnetlabError):
    code = "EXPR_SYNTAX"

    def __init__(self, message, offset, code=None):
        super().__init__(f"{message} at byte {offset}", code)
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    code = "EXPR_UNKNOWN_IDENTIFIER"

    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvalDomainError(BonnetlabError):
    code = "EXPR_DOMAIN"

    def __init__(self, message, node=None, point=None, index=None):
        where = f" at x1={point[0]!r}, x2={point[1]!r}" if point is not None else ""
        if index is not None:
            where += f" (node {index})"
        super().__init__(f"{message}{where}")
        self.node = node
        self.point = point
        self.index = index


# -- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


Ast = Num | Var | Const | Neg | BinOp | Call


# -- lexer/parser ---------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    data = text.encode("utf-8")
    src = data.decode("utf-8")
    tokens = []
    pos = 0
    # Offsets are reported in bytes; track the byte position of each char.
    byte_at = [0]
    for ch in src:
        byte_at.append(byte_at[-1] + len(ch.encode("utf-8")))
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            rest = src[pos:]
            if rest.strip() == "":
                break
            bad = pos + (len(rest) - len(rest.lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", byte_at[bad])
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), byte_at[m.start(kind)]))
        pos = m.end()
    tokens.append(("end", "", byte_at[len(src)]))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off)

    def parse(self):
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.exponent())
        return base

    def exponent(self):
        kind, text, off = self.peek()
        if kind == "num":
            self.take()
            node = self.number(text, off)
        elif (kind, text) == ("op", "("):
            self.take()
            node = self.expr()
            self.expect(")")
        else:
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"exponent must be a number or parenthesized, found {found}", off)
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", node, self.exponent())
        return node

    @staticmethod
    def number(text, off):
        value = float(text)
        if not math.isfinite(value):
            raise ExprSyntaxError(f"numeric literal {text!r} overflows", off)
        return Num(value)

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return self.number(text, off)
        if kind == "name":
            if text in VARIABLES:
                return Var(text)
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifier(text, off)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", off)


def parse(text: str) -> Ast:
    return _Parser(text).parse()


def serialize(node: Ast) -> str:
    """Fully parenthesized text that parses back to ``node``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{serialize(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({serialize(node.arg)})"
    if node.op == "^":
        return f"({serialize(node.left)}^({serialize(node.right)}))"
    return f"({serialize(node.left)}{node.op}{serialize(node.right)})"


# -- evaluation -----------------------------------------------------------
#
# A single array-valued evaluator serves both scalar and grid evaluation;
# any failing node raises with the first offending point.

def _fail(msg, node, mask, x1, x2):
    idx = tuple(int(k) for k in np.argwhere(mask)[0]) if np.ndim(mask) else None
    if idx is None:
        point = (float(x1), float(x2))
    else:
        point = (float(np.broadcast_to(x1, mask.shape)[idx]), float(np.broadcast_to(x2, mask.shape)[idx]))
    raise EvalDomainError(f"{msg} in {serialize(node)}", node, point, idx)


def _check(values, node, x1, x2):
    bad = ~np.isfinite(values)
    if np.any(bad):
        _fail("non-finite result", node, bad, x1, x2)
    return values


def _eval(node, x1, x2):
    if isinstance(node, Num):
        return np.asarray(node.value)
    if isinstance(node, Var):
        return x1 if node.name == "x1" else x2
    if isinstance(node, Const):
        return np.asarray(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_eval(node.operand, x1, x2)
    if isinstance(node, Call):
        a = _eval(node.arg, x1, x2)
        f = node.func
        with np.errstate(all="ignore"):
            if f == "ln":
                bad = a <= 0
                if np.any(bad):
                    _fail("ln of non-positive value", node, bad, x1, x2)
                return np.log(a)
            if f == "sqrt":
                bad = a < 0
                if np.any(bad):
                    _fail("sqrt of negative value", node, bad, x1, x2)
                return np.sqrt(a)
            out = {
                "sin": np.sin,
                "cos": np.cos,
                "tan": np.tan,
                "exp": np.exp,
                "abs": np.abs,
                "sgn": np.sign,
            }[f](a)
        return _check(out, node, x1, x2)
    a = _eval(node.left, x1, x2)
    b = _eval(node.right, x1, x2)
    with np.errstate(all="ignore"):
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            bad = np.broadcast_to(b == 0, np.broadcast(a, b).shape)
            if np.any(bad):
                _fail("division by zero", node, bad, x1, x2)
            out = a / b
        else:
            bad = (a < 0) & (b != np.round(b))
            bad = np.broadcast_to(bad | ((a == 0) & (b < 0)), np.broadcast(a, b).shape)
            if np.any(bad):
                _fail("power outside its real domain", node, bad, x1, x2)
            out = np.power(a, b)
    return _check(out, node, x1, x2)


def evaluate(ast: Ast, x1: float, x2: float = 0.0) -> float:
    return float(_eval(ast, np.asarray(float(x1)), np.asarray(float(x2))))


def evaluate_array(ast: Ast, x1, x2) -> np.ndarray:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast(x1, x2).shape
    return np.broadcast_to(_eval(ast, x1, x2), shape).astype(float)


def sample(ast: Ast, grid: Grid2) -> ScalarField2:
    x1, x2 = grid.mesh()
    return ScalarField2(grid, evaluate_array(ast, x1, x2))


def compile_1d(ast: Ast, var: str = "x1"):
    """Vectorized callable of one variable; the other variable is fixed at 0."""
    if var == "x1":
        return lambda x: evaluate_array(ast, x, 0.0)
    return lambda x: evaluate_array(ast, 0.0, x)


def variables(ast: Ast) -> set[str]:
    if isinstance(ast, Var):
        return {ast.name}
    if isinstance(ast, (Neg,)):
        return variables(ast.operand)
    if isinstance(ast, Call):
        return variables(ast.arg)
    if isinstance(ast, BinOp):
        return variables(ast.left) | variables(ast.right)
    return set()
