"""A tiny expression language for force fields ``F(y)``.

Grammar (EBNF)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ["^" ["-"] INTEGER]
    atom    := NUMBER | "y" | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := "sin" | "cos" | "exp" | "tanh" | "atan"

``^`` binds tighter than unary minus, so ``-y^2`` is ``-(y^2)``.  A minus
applied directly to a numeric literal is folded into the literal.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCS = ("sin", "cos", "exp", "tanh", "atan")


class ExprSyntaxError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class EvaluationError(ArithmeticError):
    pass


class Expr:
    prec = 5

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    prec = 3


@dataclass(frozen=True)
class BinOp(Expr):
    left: Expr
    right: Expr
    op = "?"


@dataclass(frozen=True)
class Add(BinOp):
    op = "+"
    prec = 1


@dataclass(frozen=True)
class Sub(BinOp):
    op = "-"
    prec = 1


@dataclass(frozen=True)
class Mul(BinOp):
    op = "*"
    prec = 2


@dataclass(frozen=True)
class Div(BinOp):
    op = "/"
    prec = 2


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    prec = 4


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def neg(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    return Neg(e)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    pos = 0
    out = []
    n = len(src)
    while pos < n:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            off = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[off]!r}", off)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", off)
        return e

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, text, off = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", text):
                raise ExprSyntaxError("exponent must be an integer literal", off)
            if self.peek()[:2] == ("op", "^"):
                raise ExprSyntaxError("chained exponent; add parentheses", self.peek()[2])
            return Pow(base, sign * int(text))
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "y":
                return Var()
            if text in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ExprSyntaxError(f"unknown identifier {text!r}", off)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", off)


def parse_force(src: str) -> Expr:
    """Parse ``src`` into an expression tree."""
    return _Parser(src).parse()


# ---------------------------------------------------------------- printing

def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_string(e: Expr) -> str:
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return "y"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        return "-" + (f"({inner})" if e.arg.prec < Neg.prec else inner)
    if isinstance(e, Pow):
        b = to_string(e.base)
        if e.base.prec <= Pow.prec or (isinstance(e.base, Num) and e.base.value < 0):
            b = f"({b})"
        return f"{b}^{e.exponent}"
    if isinstance(e, BinOp):
        lhs = to_string(e.left)
        rhs = to_string(e.right)
        if e.left.prec < e.prec:
            lhs = f"({lhs})"
        if e.right.prec <= e.prec:
            rhs = f"({rhs})"
        sep = " " if e.prec == 1 else ""
        return f"{lhs}{sep}{e.op}{sep}{rhs}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- simplification

def _is(e, v):
    return isinstance(e, Num) and e.value == v


def simplify(e: Expr) -> Expr:
    """Constant folding and identity elimination; nothing smarter."""
    if isinstance(e, (Num, Var)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        if isinstance(a, Neg):
            return a.arg
        if isinstance(a, Mul) and isinstance(a.left, Num):
            return simplify(Mul(Num(-a.left.value), a.right))
        return neg(a)
    if isinstance(e, Call):
        a = simplify(e.arg)
        if isinstance(a, Num):
            try:
                return Num(float(getattr(math, e.func)(a.value)))
            except OverflowError:
                pass
        return Call(e.func, a)
    if isinstance(e, Pow):
        b = simplify(e.base)
        if e.exponent == 0:
            return Num(1.0)
        if e.exponent == 1:
            return b
        if isinstance(b, Num) and not (b.value == 0 and e.exponent < 0):
            try:
                return Num(float(b.value ** e.exponent))
            except OverflowError:
                pass
        return Pow(b, e.exponent)
    l, r = simplify(e.left), simplify(e.right)
    if isinstance(l, Num) and isinstance(r, Num):
        if not (isinstance(e, Div) and r.value == 0):
            v = _BINARY[type(e)](l.value, r.value)
            if math.isfinite(v):
                return Num(v)
    if isinstance(e, Add):
        if _is(l, 0):
            return r
        if _is(r, 0):
            return l
        if isinstance(r, Num) and r.value < 0:
            return Sub(l, Num(-r.value))
        if isinstance(r, Neg):
            return Sub(l, r.arg)
        return Add(l, r)
    if isinstance(e, Sub):
        if _is(r, 0):
            return l
        if _is(l, 0):
            return simplify(Neg(r))
        if isinstance(r, Num) and r.value < 0:
            return Add(l, Num(-r.value))
        return Sub(l, r)
    if isinstance(e, Mul):
        if _is(l, 0) or _is(r, 0):
            return Num(0.0)
        if _is(l, 1):
            return r
        if _is(r, 1):
            return l
        if _is(l, -1):
            return simplify(Neg(r))
        if _is(r, -1):
            return simplify(Neg(l))
        if isinstance(r, Num):
            l, r = r, l
        if isinstance(l, Num) and isinstance(r, Mul) and isinstance(r.left, Num):
            return Mul(Num(l.value * r.left.value), r.right)
        if isinstance(l, Num) and isinstance(r, Neg):
            return Mul(Num(-l.value), r.arg)
        return Mul(l, r)
    if isinstance(e, Div):
        if _is(r, 1):
            return l
        if _is(l, 0):
            return Num(0.0)
        return Div(l, r)
    raise TypeError(f"not an expression: {e!r}")


_BINARY = {
    Add: lambda a, b: a + b,
    Sub: lambda a, b: a - b,
    Mul: lambda a, b: a * b,
    Div: lambda a, b: a / b,
}


# ---------------------------------------------------------------- calculus

def _d(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0)
    if isinstance(e, Neg):
        return Neg(_d(e.arg))
    if isinstance(e, Add):
        return Add(_d(e.left), _d(e.right))
    if isinstance(e, Sub):
        return Sub(_d(e.left), _d(e.right))
    if isinstance(e, Mul):
        return Add(Mul(_d(e.left), e.right), Mul(e.left, _d(e.right)))
    if isinstance(e, Div):
        return Div(Sub(Mul(_d(e.left), e.right), Mul(e.left, _d(e.right))), Pow(e.right, 2))
    if isinstance(e, Pow):
        return Mul(Mul(Num(float(e.exponent)), Pow(e.base, e.exponent - 1)), _d(e.base))
    if isinstance(e, Call):
        u, du = e.arg, _d(e.arg)
        outer = {
            "sin": lambda: Call("cos", u),
            "cos": lambda: Neg(Call("sin", u)),
            "exp": lambda: Call("exp", u),
            "tanh": lambda: Sub(Num(1.0), Pow(Call("tanh", u), 2)),
            "atan": lambda: Div(Num(1.0), Add(Num(1.0), Pow(u, 2))),
        }[e.func]()
        return Mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")


def differentiate(e: Expr) -> Expr:
    """Exact derivative with respect to ``y``, constant-folded."""
    return simplify(_d(e))


# ---------------------------------------------------------------- evaluation

_NP_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "atan": np.arctan}


def _ev(e: Expr, y):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return y
    if isinstance(e, Neg):
        return -_ev(e.arg, y)
    if isinstance(e, Call):
        return _NP_FUNCS[e.func](_ev(e.arg, y))
    if isinstance(e, Pow):
        b = _ev(e.base, y)
        if e.exponent < 0:
            return 1.0 / b ** (-e.exponent)
        return b ** e.exponent
    return _BINARY[type(e)](_ev(e.left, y), _ev(e.right, y))


def evaluate(e: Expr, y, *, overflow_ok: bool = False):
    """Evaluate at a scalar or numpy array; division by zero raises EvaluationError."""
    scalar = np.ndim(y) == 0
    yy = np.asarray(y, dtype=float)
    with np.errstate(divide="raise", invalid="raise", over="ignore" if overflow_ok else "raise"):
        try:
            out = _ev(e, yy)
        except FloatingPointError as exc:
            raise EvaluationError(f"cannot evaluate {to_string(e)}: {exc}") from None
    out = np.asarray(out, dtype=float)
    if not scalar:
        return np.broadcast_to(out, yy.shape).copy()
    return float(out)


# ---------------------------------------------------------------- bytecode

OP_CONST, OP_VAR, OP_NEG, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW = range(8)
OP_SIN, OP_COS, OP_EXP, OP_TANH, OP_ATAN = range(8, 13)
_FUNC_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "tanh": OP_TANH, "atan": OP_ATAN}
_BIN_OPS = {Add: OP_ADD, Sub: OP_SUB, Mul: OP_MUL, Div: OP_DIV}
MAX_STACK = 64


@dataclass(frozen=True, eq=False)
class Bytecode:
    """Postfix program: ``code[i] = (opcode, arg)``; CONST args index ``consts``."""

    code: np.ndarray
    consts: np.ndarray
    depth: int


def compile_expr(e: Expr) -> Bytecode:
    code: list[tuple[int, int]] = []
    consts: list[float] = []
    depth = 0
    cur = 0

    def push(op, arg=0, delta=0):
        nonlocal depth, cur
        code.append((op, arg))
        cur += delta
        depth = max(depth, cur)

    def emit(node):
        if isinstance(node, Num):
            consts.append(node.value)
            push(OP_CONST, len(consts) - 1, 1)
        elif isinstance(node, Var):
            push(OP_VAR, 0, 1)
        elif isinstance(node, Neg):
            emit(node.arg)
            push(OP_NEG)
        elif isinstance(node, Pow):
            emit(node.base)
            push(OP_POW, node.exponent)
        elif isinstance(node, Call):
            emit(node.arg)
            push(_FUNC_OPS[node.func])
        else:
            emit(node.left)
            emit(node.right)
            push(_BIN_OPS[type(node)], 0, -1)

    emit(e)
    if depth > MAX_STACK:
        raise ValueError(f"expression needs stack depth {depth} > {MAX_STACK}")
    return Bytecode(
        np.ascontiguousarray(code, dtype=np.int64).reshape(-1, 2),
        np.ascontiguousarray(consts if consts else [0.0], dtype=float),
        depth,
    )
