"""Tokenizer, recursive-descent parser and printer for the density DSL.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' ['-'] int)?
    base   := number | name | func '(' expr ')' | deriv '(' name ')' | '(' expr ')'
    deriv  := 'dx' | 'dy'
    func   := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt'

Names resolve to field components (bound by the schema) or to parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from ..errors import NestedDerivativeError, ParseError, UnknownSymbolError
from .nodes import AXIS_NAMES, FUNCTIONS, Bin, Call, Deriv, Node, Num, Param, Pow, Sym, Unary

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Token("end", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, src: str, symbols: Iterable[str], params: Iterable[str], dim: int, winding: Iterable[str]):
        self.tokens = tokenize(src)
        self.i = 0
        self.symbols = set(symbols)
        self.params = set(params)
        self.dim = dim
        self.winding = set(winding)

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ParseError(f"expected {text!r}, found {found}", t.line, t.col)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.line, self.tok.col)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.tok.text == "-":
            self.advance()
            return Unary(self.factor())
        node = self.base()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            t = self.tok
            if t.kind != "num" or not re.fullmatch(r"\d+", t.text):
                raise ParseError("exponent must be an integer literal", t.line, t.col)
            self.advance()
            node = Pow(node, sign * int(t.text))
        return node

    def base(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind != "name":
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ParseError(f"unexpected {found}", t.line, t.col)
        self.advance()
        if t.text in AXIS_NAMES:
            return self.deriv(t)
        if t.text in FUNCTIONS:
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(t.text, arg)
        if self.tok.text == "(":
            raise UnknownSymbolError(f"unknown function {t.text!r}", t.line, t.col)
        if t.text in self.symbols:
            if t.text in self.winding:
                raise ParseError(f"clock field {t.text!r} may only appear under a derivative", t.line, t.col)
            return Sym(t.text)
        if t.text in self.params:
            return Param(t.text)
        raise UnknownSymbolError(f"unknown symbol {t.text!r}", t.line, t.col)

    def deriv(self, head: Token) -> Node:
        axis = AXIS_NAMES[head.text]
        if axis >= self.dim:
            raise UnknownSymbolError(f"{head.text} is not available in {self.dim}D", head.line, head.col)
        self.expect("(")
        t = self.tok
        if t.kind == "name" and t.text in AXIS_NAMES:
            raise NestedDerivativeError("nested derivatives are not first order", t.line, t.col)
        if t.kind != "name":
            raise ParseError("a derivative applies only to a field component", t.line, t.col)
        self.advance()
        if t.text not in self.symbols:
            raise UnknownSymbolError(f"unknown field component {t.text!r}", t.line, t.col)
        if self.tok.text != ")":
            raise ParseError("a derivative applies only to a field component", self.tok.line, self.tok.col)
        self.advance()
        return Deriv(axis, t.text)


def parse_expression(src: str, symbols: Iterable[str], params: Iterable[str] = (), dim: int = 2, winding: Iterable[str] = ()) -> Node:
    return _Parser(src, symbols, params, dim, winding).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_AXES = "xy"


def _num(v: float) -> str:
    r = repr(float(v))
    return r[:-2] if r.endswith(".0") and "e" not in r else r


def pretty(node: Node) -> str:
    """Canonical text; ``parse`` of the output reproduces ``node``."""
    return _pp(node, 0)


def _pp(node: Node, ctx: int) -> str:
    if isinstance(node, Num):
        s = _num(abs(node.value))
        if node.value < 0 or (node.value == 0 and str(node.value).startswith("-")):
            s = "-" + s
            return f"({s})" if ctx > 0 else s
        return s
    if isinstance(node, (Sym, Param)):
        return node.name
    if isinstance(node, Deriv):
        return f"d{_AXES[node.axis]}({node.sym})"
    if isinstance(node, Call):
        return f"{node.func}({_pp(node.arg, 0)})"
    if isinstance(node, Unary):
        s = "-" + _pp(node.operand, 3)
        return f"({s})" if ctx > 2 else s
    if isinstance(node, Pow):
        s = f"{_pp(node.base, 4)}^{node.exponent}"
        return f"({s})" if ctx > 3 else s
    if isinstance(node, Bin):
        p = _PREC[node.op]
        s = f"{_pp(node.left, p)} {node.op} {_pp(node.right, p + 1)}"
        return f"({s})" if ctx > p else s
    raise TypeError(f"not an expression node: {node!r}")
