"""Chemical-field expression language: parsing, serialization, protected evaluation.

Every agent emits the same concentration field F(d, theta), given as an explicit
expression in the distance d from the emitter center and the angle theta of the
emitter-to-sample vector (counterclockwise from +x, in [0, 2*pi)).

The grammar is infix arithmetic with precedence ^ > unary-minus > *,/ > +,-,
parentheses, function calls sin/cos/ln/exp, the constant e, and
coefficient juxtaposition such as ``3d``.

Evaluation is protected so that any expression is total and finite over
d >= 0, theta in [0, 2*pi):

* ``ln(x)``  means ``ln(|x|)`` for x != 0, and 0 at x = 0
* ``a / b``  is 0 whenever |b| < 1e-12
* ``exp(x)`` clamps its argument to [-50, 50]
* ``a ^ b``  is ``exp(b * ln(|a|))`` under the same clamps
* any non-finite operator result maps to 0 (applied per node)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Union

import numpy as np

DIV_EPS = 1e-12
EXP_CLAMP = 50.0

FUNCTIONS = ("sin", "cos", "ln", "exp")
VARIABLES = ("d", "theta", "e")
PRESET_NAMES = ("quartermoon", "ellipse", "discs", "lines")


class ExprError(ValueError):
    """Base class for expression parsing errors, carries a character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "d", "theta" or "e"


@dataclass(frozen=True)
class Call:
    fn: str  # one of FUNCTIONS
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of "+", "-", "*", "/", "^"
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Call, Neg, BinOp]


@dataclass(frozen=True)
class FieldExpr:
    """Immutable parsed field function; safe to share across workers."""

    root: Node

    def __call__(self, d: float, theta: float) -> float:
        return evaluate(self, d, theta)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.peek()
        if kind != "op" or val != value:
            raise ExprSyntaxError(f"expected {value!r}", off)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.unary())
            elif kind == "ident" or (kind == "op" and val == "("):
                # juxtaposition, e.g. "3d" meaning 3*d
                node = BinOp("*", node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            nxt_kind, nxt_val, _ = self.peek()
            if nxt_kind == "num":  # negative literal, e.g. ln(-0.367378)
                self.advance()
                base: Node = Num(-float(nxt_val))
                k2, v2, _ = self.peek()
                if k2 == "op" and v2 == "^":  # exponent still binds tighter
                    self.advance()
                    return Neg(BinOp("^", Num(float(nxt_val)), self.unary()))
                return base
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinOp("^", base, self.unary())  # right-assoc, allows 2^-3
        return base

    def atom(self) -> Node:
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in VARIABLES:
                return Var(val)
            raise UnknownIdentifierError(val, off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected token {val!r}" if val else "unexpected end of input", off)


def parse(text: str) -> FieldExpr:
    """Parse an expression string into a FieldExpr.

    Raises ExprSyntaxError / UnknownIdentifierError with the character offset.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return FieldExpr(_Parser(text).parse())


# ---------------------------------------------------------------------------
# Serialization (round-trips to a structurally identical tree)
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    if isinstance(node, Num) and node.value < 0:
        return _NEG_PREC
    return 5


def _fmt_num(value: float) -> str:
    # positional only: the grammar has no exponent syntax ('e' is a constant)
    return np.format_float_positional(value, unique=True, trim="0")


def _ser(node: Node, min_prec: int) -> str:
    if isinstance(node, Num):
        s = _fmt_num(node.value)
    elif isinstance(node, Var):
        s = node.name
    elif isinstance(node, Call):
        s = f"{node.fn}({_ser(node.arg, 0)})"
    elif isinstance(node, Neg):
        if isinstance(node.arg, Num):
            # parenthesize so the parser does not fold "-literal" into a Num
            s = f"-({_ser(node.arg, 0)})"
        else:
            s = "-" + _ser(node.arg, _NEG_PREC + 1)
    else:
        p = _PREC[node.op]
        if node.op == "^":
            s = _ser(node.left, p + 1) + node.op + _ser(node.right, p)
        else:
            s = _ser(node.left, p) + node.op + _ser(node.right, p + 1)
    return f"({s})" if _prec(node) < min_prec else s


def serialize(expr: FieldExpr) -> str:
    return _ser(expr.root, 0)


# ---------------------------------------------------------------------------
# Protected evaluation
# ---------------------------------------------------------------------------

def _pln(x: float) -> float:
    return math.log(abs(x)) if x != 0.0 else 0.0


def _pexp(x: float) -> float:
    return math.exp(min(max(x, -EXP_CLAMP), EXP_CLAMP))


def _guard(x: float) -> float:
    return x if math.isfinite(x) else 0.0


def _eval_node(node: Node, d: float, theta: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name == "d":
            return d
        if node.name == "theta":
            return theta
        return math.e
    if isinstance(node, Neg):
        return -_eval_node(node.arg, d, theta)
    if isinstance(node, Call):
        a = _eval_node(node.arg, d, theta)
        if node.fn == "sin":
            return _guard(math.sin(a))
        if node.fn == "cos":
            return _guard(math.cos(a))
        if node.fn == "ln":
            return _guard(_pln(a))
        return _guard(_pexp(a))
    l = _eval_node(node.left, d, theta)
    r = _eval_node(node.right, d, theta)
    op = node.op
    if op == "+":
        return _guard(l + r)
    if op == "-":
        return _guard(l - r)
    if op == "*":
        return _guard(l * r)
    if op == "/":
        return _guard(l / r) if abs(r) >= DIV_EPS else 0.0
    return _guard(_pexp(r * _pln(l)))  # a^b := exp(b*ln|a|)


def evaluate(expr: FieldExpr, d: float, theta: float) -> float:
    """Reference scalar evaluation; always returns a finite float."""
    return _eval_node(expr.root, float(d), float(theta))


# ---------------------------------------------------------------------------
# Vectorized (numpy) evaluation, used by oracles and analysis paths
# ---------------------------------------------------------------------------

def _np_pln(x):
    ax = np.abs(x)
    out = np.where(ax > 0.0, ax, 1.0)
    np.log(out, out=out)
    return np.where(ax > 0.0, out, 0.0)


def _np_pexp(x):
    return np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))


def _np_guard(x):
    return np.where(np.isfinite(x), x, 0.0)


def _np_eval(node: Node, d, theta):
    if isinstance(node, Num):
        return np.full(np.shape(d), node.value)
    if isinstance(node, Var):
        if node.name == "d":
            return np.asarray(d, dtype=float)
        if node.name == "theta":
            return np.asarray(theta, dtype=float)
        return np.full(np.shape(d), math.e)
    if isinstance(node, Neg):
        return -_np_eval(node.arg, d, theta)
    if isinstance(node, Call):
        a = _np_eval(node.arg, d, theta)
        if node.fn == "sin":
            return _np_guard(np.sin(a))
        if node.fn == "cos":
            return _np_guard(np.cos(a))
        if node.fn == "ln":
            return _np_guard(_np_pln(a))
        return _np_guard(_np_pexp(a))
    l = _np_eval(node.left, d, theta)
    r = _np_eval(node.right, d, theta)
    op = node.op
    if op == "+":
        return _np_guard(l + r)
    if op == "-":
        return _np_guard(l - r)
    if op == "*":
        return _np_guard(l * r)
    if op == "/":
        small = np.abs(r) < DIV_EPS
        return np.where(small, 0.0, _np_guard(l / np.where(small, 1.0, r)))
    return _np_guard(_np_pexp(r * _np_pln(l)))


def evaluate_many(expr: FieldExpr, d, theta) -> np.ndarray:
    """Vectorized protected evaluation over arrays of d and theta."""
    with np.errstate(all="ignore"):
        d = np.asarray(d, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return np.asarray(_np_eval(expr.root, d, theta), dtype=float)


# ---------------------------------------------------------------------------
# Scalar source generation (consumed by the jit-compiled simulation kernels)
# ---------------------------------------------------------------------------

def scalar_source(expr: FieldExpr, name: str = "field_eval") -> str:
    """Emit a scalar Python function equivalent to `evaluate`.

    Repeated subtrees are evaluated once (the evolved expressions reuse large
    subexpressions heavily); the emitted source only needs `math` in scope.
    """
    lines: list[str] = []
    names: dict[Node, str] = {}

    def emit(rhs: str) -> str:
        tmp = f"t{len(lines)}"
        lines.append(f"{tmp} = {rhs}")
        return tmp

    def visit(node: Node) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Var):
            return {"d": "d", "theta": "theta", "e": "2.718281828459045"}[node.name]
        got = names.get(node)
        if got is not None:
            return got
        if isinstance(node, Neg):
            tmp = emit(f"-{visit(node.arg)}")
            names[node] = tmp
            return tmp
        if isinstance(node, Call):
            # function results are finite by construction (finite args, ln
            # protected at 0, exp clamped), so no finiteness guard is needed
            a = visit(node.arg)
            if node.fn == "sin":
                tmp = emit(f"math.sin({a})")
            elif node.fn == "cos":
                tmp = emit(f"math.cos({a})")
            elif node.fn == "ln":
                tmp = emit(f"(math.log(abs({a})) if {a} != 0.0 else 0.0)")
            else:
                tmp = emit(f"math.exp(min(max({a}, -50.0), 50.0))")
            names[node] = tmp
            return tmp
        l = visit(node.left)
        r = visit(node.right)
        op = node.op
        if op == "/":
            tmp = emit(f"({l} / {r} if abs({r}) >= 1e-12 else 0.0)")
        elif op == "^":
            ln_l = emit(f"(math.log(abs({l})) if {l} != 0.0 else 0.0)")
            tmp = emit(f"math.exp(min(max({r} * {ln_l}, -50.0), 50.0))")
            names[node] = tmp
            return tmp
        else:
            tmp = emit(f"{l} {op} {r}")
        tmp2 = emit(f"({tmp} if math.isfinite({tmp}) else 0.0)")
        names[node] = tmp2
        return tmp2

    result = visit(expr.root)
    body = "\n".join(f"    {ln}" for ln in lines)
    if body:
        return f"def {name}(d, theta):\n{body}\n    return {result}\n"
    return f"def {name}(d, theta):\n    return {result}\n"


def compile_scalar(expr: FieldExpr) -> Callable[[float, float], float]:
    """Build the plain-Python scalar function from `scalar_source`."""
    ns: dict = {"math": math}
    exec(scalar_source(expr), ns)
    return ns["field_eval"]


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def preset_text(shape: str) -> str:
    """Raw expression text for a named preset shape."""
    if shape not in PRESET_NAMES:
        raise KeyError(f"unknown preset {shape!r}; expected one of {PRESET_NAMES}")
    return (
        resources.files("morphoswarm.presets").joinpath(f"{shape}.txt").read_text("utf-8").strip()
    )


def preset(shape: str) -> FieldExpr:
    """Parsed field function for one of the built-in shapes."""
    return parse(preset_text(shape))


def load_field(name_or_path: str) -> FieldExpr:
    """Resolve a `--field` value: preset name first, then an expression file."""
    if name_or_path in PRESET_NAMES:
        return preset(name_or_path)
    with open(name_or_path, "r", encoding="utf-8") as fh:
        return parse(fh.read().strip())
