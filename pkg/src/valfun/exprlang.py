"""Differentiable scalar expressions over named variables.

Small closed language used to define objectives and constraints: constants,
variables, neg/exp/log/sqrt, +, -, *, /, and integer powers.  Expressions are
immutable trees; differentiation is symbolic and exact, so mixed second
derivatives come out in closed form.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'
    func   := 'exp' | 'log' | 'sqrt' | 'neg'

Identifiers are lowercase alphanumeric and must be declared in the variable
table passed to :func:`parse`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    """Malformed source text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownVariableError(ExprError):
    def __init__(self, name, offset=None):
        super().__init__(f"unknown variable '{name}'")
        self.name = name
        self.offset = offset


class DomainError(ExprError):
    """Evaluation left the domain (log of non-positive, sqrt of negative,
    division by zero), identifying the offending node."""

    def __init__(self, message, node=None):
        if node is not None:
            message = f"{message} in '{to_source(node)}'"
        super().__init__(message)
        self.node = node


# Saturating exp: IEEE overflow becomes +inf instead of raising, so that
# line searches can reject the step on their own.
_EXP_MAX = 709.0


def _g_exp(t):
    return math.exp(t) if t < _EXP_MAX else math.inf


@dataclass(frozen=True)
class Expr:
    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sqrt(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple


@dataclass(frozen=True)
class Prod(Expr):
    factors: tuple


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


_FUNCS = {"exp": Exp, "log": Log, "sqrt": Sqrt, "neg": Neg}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<ident>[a-z][a-z0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            raise ExprSyntaxError(
                f"unexpected character {stripped[0]!r}", len(source) - len(stripped)
            )
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, variable_table):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.table = frozenset(variable_table)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected '{op}'", off)
        return self.advance()

    def parse(self):
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"trailing input {val!r}", off)
        return e

    def expr(self):
        terms = [self.term()]
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                t = self.term()
                terms.append(Neg(t) if val == "-" else t)
            else:
                break
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors = [self.factor()]
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                f = self.factor()
                if val == "/":
                    left = factors[0] if len(factors) == 1 else Prod(tuple(factors))
                    factors = [Div(left, f)]
                else:
                    factors.append(f)
            else:
                break
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))

    def factor(self):
        b = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            sign = 1
            kind, val, off = self.peek()
            if kind == "op" and val == "-":
                self.advance()
                sign = -1
            kind, val, off = self.advance()
            if kind != "num" or any(c in val for c in ".eE"):
                raise ExprSyntaxError("exponent must be an integer constant", off)
            return Pow(b, sign * int(val))
        return b

    def base(self):
        kind, val, off = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            if val in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _FUNCS[val](arg)
            if val not in self.table:
                raise UnknownVariableError(val, off)
            return Var(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(f"unexpected token {val!r}", off)


def parse(source, variable_table):
    """Parse ``source`` into an expression tree.

    Every identifier must appear in ``variable_table`` (function names are
    reserved).  Raises :class:`ExprSyntaxError` or
    :class:`UnknownVariableError`.
    """
    return _Parser(source, variable_table).parse()


# ---------------------------------------------------------------------------
# printing


def _fmt_number(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _needs_parens_in_sum(e):
    return isinstance(e, Sum)


def _needs_parens_in_prod(e):
    return isinstance(e, (Sum, Prod, Div))


def _pow_base_source(e):
    # grammar: a pow base must be a bare 'base' production
    if isinstance(e, (Const, Var, Neg, Exp, Log, Sqrt)) and not (
        isinstance(e, Const) and e.value < 0
    ):
        return to_source(e)
    return "(" + to_source(e) + ")"


def to_source(e):
    """Render an expression in the concrete grammar; parsing the result gives
    back a structurally equal tree."""
    if isinstance(e, Const):
        if e.value < 0:
            return f"neg({_fmt_number(-e.value)})"
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"neg({to_source(e.arg)})"
    if isinstance(e, Exp):
        return f"exp({to_source(e.arg)})"
    if isinstance(e, Log):
        return f"log({to_source(e.arg)})"
    if isinstance(e, Sqrt):
        return f"sqrt({to_source(e.arg)})"
    if isinstance(e, Sum):
        parts = []
        for i, t in enumerate(e.terms):
            if i > 0 and isinstance(t, Neg):
                inner = t.arg
                s = to_source(inner)
                if _needs_parens_in_sum(inner):
                    s = "(" + s + ")"
                parts.append(" - " + s)
                continue
            s = to_source(t)
            if _needs_parens_in_sum(t):
                s = "(" + s + ")"
            parts.append(s if i == 0 else " + " + s)
        return "".join(parts)
    if isinstance(e, Prod):
        parts = []
        for f in e.factors:
            s = to_source(f)
            if _needs_parens_in_prod(f):
                s = "(" + s + ")"
            parts.append(s)
        return "*".join(parts)
    if isinstance(e, Div):
        num = to_source(e.num)
        if isinstance(e.num, (Sum, Prod, Div)):
            num = "(" + num + ")"
        den = to_source(e.den)
        if isinstance(e.den, (Sum, Prod, Div)):
            den = "(" + den + ")"
        return f"{num}/{den}"
    if isinstance(e, Pow):
        return f"{_pow_base_source(e.base)}^{e.exponent}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e, bindings):
    """Evaluate at a variable binding (name -> float).  IEEE doubles; raises
    :class:`DomainError` on log/sqrt/division domain violations."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise UnknownVariableError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, bindings)
    if isinstance(e, Exp):
        return _g_exp(evaluate(e.arg, bindings))
    if isinstance(e, Log):
        v = evaluate(e.arg, bindings)
        if v <= 0.0:
            raise DomainError(f"log of non-positive value {v}", e)
        return math.log(v)
    if isinstance(e, Sqrt):
        v = evaluate(e.arg, bindings)
        if v < 0.0:
            raise DomainError(f"sqrt of negative value {v}", e)
        return math.sqrt(v)
    if isinstance(e, Sum):
        return sum(evaluate(t, bindings) for t in e.terms)
    if isinstance(e, Prod):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, bindings)
        return out
    if isinstance(e, Div):
        den = evaluate(e.den, bindings)
        if den == 0.0:
            raise DomainError("division by zero", e)
        return evaluate(e.num, bindings) / den
    if isinstance(e, Pow):
        b = evaluate(e.base, bindings)
        if e.exponent < 0 and b == 0.0:
            raise DomainError("zero raised to a negative power", e)
        return float(b**e.exponent)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# simplification-aware constructors (used by differentiate)


def _is_zero(e):
    return isinstance(e, Const) and e.value == 0.0


def _is_one(e):
    return isinstance(e, Const) and e.value == 1.0


def make_sum(terms):
    kept = [t for t in terms if not _is_zero(t)]
    if not kept:
        return Const(0.0)
    if len(kept) == 1:
        return kept[0]
    return Sum(tuple(kept))


def make_prod(factors):
    if any(_is_zero(f) for f in factors):
        return Const(0.0)
    kept = [f for f in factors if not _is_one(f)]
    if not kept:
        return Const(1.0)
    if len(kept) == 1:
        return kept[0]
    return Prod(tuple(kept))


def make_neg(e):
    if _is_zero(e):
        return Const(0.0)
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def make_div(num, den):
    if _is_zero(num):
        return Const(0.0)
    if _is_one(den):
        return num
    return Div(num, den)


def make_pow(base, exponent):
    if exponent == 0:
        return Const(1.0)
    if exponent == 1:
        return base
    return Pow(base, exponent)


def differentiate(e, var):
    """Exact partial derivative with respect to ``var``.

    The result is lightly simplified (0*a -> 0, a+0 -> a, 1*a -> a); no
    factoring or reassociation is attempted.
    """
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0) if e.name == var else Const(0.0)
    if isinstance(e, Neg):
        return make_neg(differentiate(e.arg, var))
    if isinstance(e, Exp):
        return make_prod([Exp(e.arg), differentiate(e.arg, var)])
    if isinstance(e, Log):
        return make_div(differentiate(e.arg, var), e.arg)
    if isinstance(e, Sqrt):
        return make_div(differentiate(e.arg, var), make_prod([Const(2.0), Sqrt(e.arg)]))
    if isinstance(e, Sum):
        return make_sum([differentiate(t, var) for t in e.terms])
    if isinstance(e, Prod):
        terms = []
        for i, f in enumerate(e.factors):
            df = differentiate(f, var)
            if _is_zero(df):
                continue
            rest = list(e.factors)
            rest[i] = df
            terms.append(make_prod(rest))
        return make_sum(terms)
    if isinstance(e, Div):
        dn = differentiate(e.num, var)
        dd = differentiate(e.den, var)
        if _is_zero(dd):
            return make_div(dn, e.den)
        top = make_sum([make_prod([dn, e.den]), make_neg(make_prod([e.num, dd]))])
        return make_div(top, make_pow(e.den, 2))
    if isinstance(e, Pow):
        db = differentiate(e.base, var)
        return make_prod(
            [Const(float(e.exponent)), make_pow(e.base, e.exponent - 1), db]
        )
    raise TypeError(f"not an expression: {e!r}")


def substitute(e, values):
    """Replace variables named in ``values`` by constants."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        if e.name in values:
            return Const(float(values[e.name]))
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, values))
    if isinstance(e, Exp):
        return Exp(substitute(e.arg, values))
    if isinstance(e, Log):
        return Log(substitute(e.arg, values))
    if isinstance(e, Sqrt):
        return Sqrt(substitute(e.arg, values))
    if isinstance(e, Sum):
        return Sum(tuple(substitute(t, values) for t in e.terms))
    if isinstance(e, Prod):
        return Prod(tuple(substitute(f, values) for f in e.factors))
    if isinstance(e, Div):
        return Div(substitute(e.num, values), substitute(e.den, values))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, values), e.exponent)
    raise TypeError(f"not an expression: {e!r}")


def variables(e):
    """Set of variable names appearing in the tree."""
    out = set()

    def walk(node):
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Neg):
            walk(node.arg)
        elif isinstance(node, (Exp, Log, Sqrt)):
            walk(node.arg)
        elif isinstance(node, Sum):
            for t in node.terms:
                walk(t)
        elif isinstance(node, Prod):
            for f in node.factors:
                walk(f)
        elif isinstance(node, Div):
            walk(node.num)
            walk(node.den)
        elif isinstance(node, Pow):
            walk(node.base)

    walk(e)
    return out


# ---------------------------------------------------------------------------
# compilation (internal fast path; semantics identical to evaluate())


def _emit(e, index):
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"a[{index[e.name]}]"
    if isinstance(e, Neg):
        return f"(-{_emit(e.arg, index)})"
    if isinstance(e, Exp):
        return f"_exp({_emit(e.arg, index)})"
    if isinstance(e, Log):
        return f"_log({_emit(e.arg, index)})"
    if isinstance(e, Sqrt):
        return f"_sqrt({_emit(e.arg, index)})"
    if isinstance(e, Sum):
        return "(" + "+".join(_emit(t, index) for t in e.terms) + ")"
    if isinstance(e, Prod):
        return "(" + "*".join(_emit(f, index) for f in e.factors) + ")"
    if isinstance(e, Div):
        return f"_div({_emit(e.num, index)},{_emit(e.den, index)})"
    if isinstance(e, Pow):
        return f"_pow({_emit(e.base, index)},{e.exponent})"
    raise TypeError(f"not an expression: {e!r}")


def _c_log(v):
    if v <= 0.0:
        raise DomainError(f"log of non-positive value {v}")
    return math.log(v)


def _c_sqrt(v):
    if v < 0.0:
        raise DomainError(f"sqrt of negative value {v}")
    return math.sqrt(v)


def _c_div(num, den):
    if den == 0.0:
        raise DomainError("division by zero")
    return num / den


def _c_pow(b, k):
    if k < 0 and b == 0.0:
        raise DomainError("zero raised to a negative power")
    return float(b**k)


def compile_expr(e, var_order):
    """Compile to a callable taking a flat sequence ordered like
    ``var_order``.  Raises the same :class:`DomainError` as :func:`evaluate`.
    """
    index = {name: i for i, name in enumerate(var_order)}
    src = f"lambda a: ({_emit(e, index)})"
    env = {"_exp": _g_exp, "_log": _c_log, "_sqrt": _c_sqrt, "_div": _c_div, "_pow": _c_pow}
    return eval(src, env)  # noqa: S307 - source is generated from our own AST
