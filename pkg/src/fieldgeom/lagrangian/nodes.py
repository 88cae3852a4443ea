"""Expression tree for Lagrangian densities."""

from __future__ import annotations

from dataclasses import dataclass

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
AXIS_NAMES = {"dx": 0, "dy": 1}


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Sym(Node):
    """A field component such as ``phi`` or ``A_x``."""

    name: str


@dataclass(frozen=True)
class Param(Node):
    name: str


@dataclass(frozen=True)
class Deriv(Node):
    axis: int
    sym: str


@dataclass(frozen=True)
class Unary(Node):
    operand: Node


@dataclass(frozen=True)
class Bin(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


ZERO = Num(0.0)
ONE = Num(1.0)


def walk(node: Node):
    yield node
    if isinstance(node, Unary):
        yield from walk(node.operand)
    elif isinstance(node, Bin):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Pow):
        yield from walk(node.base)
    elif isinstance(node, Call):
        yield from walk(node.arg)


def variables(node: Node) -> set:
    """Jet variables (Sym and Deriv leaves) appearing in ``node``."""
    return {n for n in walk(node) if isinstance(n, (Sym, Deriv))}
