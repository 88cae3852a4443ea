"""Symbolic partial derivatives, simplification and numeric evaluation of densities."""

from __future__ import annotations

from typing import Mapping

from .. import dual as ad
from .nodes import ONE, ZERO, Bin, Call, Deriv, Node, Num, Param, Pow, Sym, Unary

_FUNCS = {"sin": ad.sin, "cos": ad.cos, "exp": ad.exp, "log": ad.log, "sqrt": ad.sqrt}


def _is(node: Node, v: float) -> bool:
    return isinstance(node, Num) and node.value == v


def add(a: Node, b: Node) -> Node:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if a == b:
        return ZERO
    return Bin("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, -1):
        return neg(b)
    if _is(b, -1):
        return neg(a)
    return Bin("*", a, b)


def div(a: Node, b: Node) -> Node:
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    return Bin("/", a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value) if a.value != 0 else ZERO
    if isinstance(a, Unary):
        return a.operand
    return Unary(a)


def power(a: Node, n: int) -> Node:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num) and (a.value != 0 or n > 0):
        return Num(a.value**n)
    return Pow(a, n)


def simplify(node: Node) -> Node:
    """Bottom-up constant folding with the neutral-element rules of the builders."""
    if isinstance(node, Unary):
        return neg(simplify(node.operand))
    if isinstance(node, Bin):
        a, b = simplify(node.left), simplify(node.right)
        return {"+": add, "-": sub, "*": mul, "/": div}[node.op](a, b)
    if isinstance(node, Pow):
        return power(simplify(node.base), node.exponent)
    if isinstance(node, Call):
        return Call(node.func, simplify(node.arg))
    return node


def diff(node: Node, var: Node) -> Node:
    """Partial derivative with respect to a jet variable (``Sym`` or ``Deriv``)."""
    if isinstance(node, (Num, Param)):
        return ZERO
    if isinstance(node, (Sym, Deriv)):
        return ONE if node == var else ZERO
    if isinstance(node, Unary):
        return neg(diff(node.operand, var))
    if isinstance(node, Bin):
        a, b = node.left, node.right
        da, db = diff(a, var), diff(b, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        # quotient rule, split so constant denominators stay simple
        return sub(div(da, b), div(mul(a, db), power(b, 2)))
    if isinstance(node, Pow):
        n = node.exponent
        return mul(mul(Num(float(n)), power(node.base, n - 1)), diff(node.base, var))
    if isinstance(node, Call):
        u = node.arg
        du = diff(u, var)
        if _is(du, 0):
            return ZERO
        outer = {
            "sin": lambda: Call("cos", u),
            "cos": lambda: neg(Call("sin", u)),
            "exp": lambda: Call("exp", u),
            "log": lambda: div(ONE, u),
            "sqrt": lambda: div(Num(0.5), Call("sqrt", u)),
        }[node.func]()
        return mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, env: Mapping, params: Mapping[str, float] | None = None):
    """Numeric value; ``env`` maps ``Sym``/``Deriv`` nodes to arrays (duals allowed)."""
    params = params or {}
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        return float(params[node.name])
    if isinstance(node, (Sym, Deriv)):
        return env[node]
    if isinstance(node, Unary):
        return -evaluate(node.operand, env, params)
    if isinstance(node, Bin):
        a = evaluate(node.left, env, params)
        b = evaluate(node.right, env, params)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        base = evaluate(node.base, env, params)
        if node.exponent < 0:
            return 1.0 / base ** (-node.exponent)
        return base**node.exponent
    if isinstance(node, Call):
        return _FUNCS[node.func](evaluate(node.arg, env, params))
    raise TypeError(f"not an expression node: {node!r}")
