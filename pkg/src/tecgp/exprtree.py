"""Expression-tree genotype: construction, evaluation, and prefix text form.

Trees are immutable values built from frozen dataclasses, so variation
operators always return new trees and evaluation is a pure function. The
tree language is fixed: the four binary arithmetic operators over five
named input variables, optionally extended with ephemeral constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Sequence, Union

import numpy as np

OPERATORS = ("+", "-", "*", "/")
VARIABLE_NAMES = ("sinhour", "coshour", "sinday", "cosday", "ssn")
N_VARIABLES = len(VARIABLE_NAMES)


@dataclass(frozen=True)
class Var:
    """Leaf referencing one of the five input variables by column index."""

    index: int


@dataclass(frozen=True)
class Const:
    """Leaf holding a fixed finite constant."""

    value: float


@dataclass(frozen=True)
class Op:
    """Internal node applying one of ``+ - * /`` to its two children."""

    symbol: str
    left: "Node"
    right: "Node"


Node = Union[Var, Const, Op]


@dataclass(frozen=True)
class PrimitiveSet:
    """Terminal alphabet available to the random generators.

    The function set is always the four binary operators. Terminals are the
    five input variables; when ``constants`` is true the generators also get
    one extra terminal slot that draws an ephemeral constant uniformly from
    ``[const_low, const_high]`` at node-creation time.
    """

    constants: bool = False
    const_low: float = -5.0
    const_high: float = 5.0

    def n_terminal_slots(self) -> int:
        return N_VARIABLES + (1 if self.constants else 0)


class PrefixParseError(ValueError):
    """Raised when a prefix-notation string cannot be parsed."""


def random_terminal(rng: Random, pset: PrimitiveSet) -> Node:
    """Draw a terminal uniformly over the variable slots (+ constant slot)."""
    slot = rng.randrange(pset.n_terminal_slots())
    if slot == N_VARIABLES:
        return Const(rng.uniform(pset.const_low, pset.const_high))
    return Var(slot)


def random_operator(rng: Random) -> str:
    return OPERATORS[rng.randrange(len(OPERATORS))]


def generate_full(rng: Random, depth: int, pset: PrimitiveSet = PrimitiveSet()) -> Node:
    """Full method: every leaf sits at exactly ``depth`` edges from the root."""
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    if depth == 0:
        return random_terminal(rng, pset)
    symbol = random_operator(rng)
    left = generate_full(rng, depth - 1, pset)
    right = generate_full(rng, depth - 1, pset)
    return Op(symbol, left, right)


def generate_grow(rng: Random, max_depth: int, pset: PrimitiveSet = PrimitiveSet()) -> Node:
    """Grow method: below the depth cap each node is a function with
    probability |F| / (|F| + |T|), a terminal otherwise; at the cap only
    terminals are drawn."""
    if max_depth < 0:
        raise ValueError(f"max_depth must be >= 0, got {max_depth}")
    if max_depth == 0:
        return random_terminal(rng, pset)
    n_f = len(OPERATORS)
    p_function = n_f / (n_f + pset.n_terminal_slots())
    if rng.random() < p_function:
        symbol = random_operator(rng)
        left = generate_grow(rng, max_depth - 1, pset)
        right = generate_grow(rng, max_depth - 1, pset)
        return Op(symbol, left, right)
    return random_terminal(rng, pset)


def ramped_half_and_half(
    rng: Random, count: int, max_depth: int, pset: PrimitiveSet = PrimitiveSet()
) -> list[Node]:
    """Ramped initialization: depths ramp over 2..max_depth in equal shares,
    half full / half grow within each depth bucket.

    Remainder trees from uneven division are assigned round-robin starting
    from the deepest bucket; an odd bucket generates its extra tree with the
    full method. Trees are emitted shallow-to-deep, full before grow, so the
    output order is deterministic for a fixed seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    depths = list(range(2, max_depth + 1)) if max_depth >= 2 else [max_depth]
    base, rem = divmod(count, len(depths))
    shares = {d: base for d in depths}
    for i, d in enumerate(reversed(depths)):
        if i < rem:
            shares[d] += 1
    trees: list[Node] = []
    for d in depths:
        n_full = (shares[d] + 1) // 2
        n_grow = shares[d] - n_full
        trees.extend(generate_full(rng, d, pset) for _ in range(n_full))
        trees.extend(generate_grow(rng, d, pset) for _ in range(n_grow))
    return trees


def evaluate(tree: Node, row: Sequence[float]) -> float:
    """Evaluate a tree on one row (anything indexable by variable index).

    Division by exactly zero yields 1, so evaluation is total; everything
    else is plain IEEE-754 arithmetic.
    """
    if isinstance(tree, Var):
        return float(row[tree.index])
    if isinstance(tree, Const):
        return tree.value
    a = evaluate(tree.left, row)
    b = evaluate(tree.right, row)
    symbol = tree.symbol
    if symbol == "+":
        return a + b
    if symbol == "-":
        return a - b
    if symbol == "*":
        return a * b
    return a / b if b != 0.0 else 1.0


def evaluate_batch(tree: Node, inputs: np.ndarray) -> np.ndarray:
    """Evaluate a tree over an (n, 5) input matrix in one vectorized pass.

    Row-for-row identical to :func:`evaluate` (same IEEE-754 double ops,
    same zero-division rule).
    """
    if isinstance(tree, Var):
        return inputs[:, tree.index]
    if isinstance(tree, Const):
        return np.full(inputs.shape[0], tree.value)
    a = evaluate_batch(tree.left, inputs)
    b = evaluate_batch(tree.right, inputs)
    symbol = tree.symbol
    if symbol == "+":
        return a + b
    if symbol == "-":
        return a - b
    if symbol == "*":
        return a * b
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = a / b
    return np.where(b == 0.0, 1.0, quotient)


def size(tree: Node) -> int:
    """Total node count, internal nodes plus leaves."""
    if isinstance(tree, Op):
        return 1 + size(tree.left) + size(tree.right)
    return 1


def depth(tree: Node) -> int:
    """Edges on the longest root-to-leaf path (a lone leaf has depth 0)."""
    if isinstance(tree, Op):
        return 1 + max(depth(tree.left), depth(tree.right))
    return 0


def format_constant(value: float) -> str:
    """Shortest decimal that round-trips the underlying double.

    Integer-valued constants drop the trailing ``.0`` (both forms parse back
    to the identical double).
    """
    text = repr(float(value))
    if text.endswith(".0"):
        return text[:-2]
    return text


def to_prefix(tree: Node, var_names: Sequence[str] = VARIABLE_NAMES) -> str:
    """Render a tree in parenthesized, whitespace-separated prefix notation."""
    if isinstance(tree, Var):
        return var_names[tree.index]
    if isinstance(tree, Const):
        return format_constant(tree.value)
    left = to_prefix(tree.left, var_names)
    right = to_prefix(tree.right, var_names)
    return f"({tree.symbol} {left} {right})"


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_prefix(text: str, var_names: Sequence[str] = VARIABLE_NAMES) -> Node:
    """Parse prefix notation back into a tree.

    Inverse of :func:`to_prefix` over the same variable alphabet. Raises
    :class:`PrefixParseError` with the offending token position on unknown
    symbols, arity mismatches, unbalanced parentheses, or trailing tokens.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise PrefixParseError("empty expression")
    name_to_index = {name: i for i, name in enumerate(var_names)}
    pos = 0

    def fail(message: str) -> PrefixParseError:
        if pos < len(tokens):
            return PrefixParseError(f"token {pos} ({tokens[pos]!r}): {message}")
        return PrefixParseError(f"token {pos} (end of input): {message}")

    def parse_node() -> Node:
        nonlocal pos
        if pos >= len(tokens):
            raise fail("unexpected end of expression")
        token = tokens[pos]
        if token == "(":
            pos += 1
            if pos >= len(tokens):
                raise fail("expected operator after '('")
            symbol = tokens[pos]
            if symbol not in OPERATORS:
                raise fail(f"unknown operator {symbol!r}")
            pos += 1
            left = parse_node()
            right = parse_node()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise fail("expected ')' closing binary operator (arity mismatch)")
            pos += 1
            return Op(symbol, left, right)
        if token == ")":
            raise fail("unexpected ')': operator is missing an operand (arity mismatch)")
        pos += 1
        if token in name_to_index:
            return Var(name_to_index[token])
        try:
            value = float(token)
        except ValueError:
            raise PrefixParseError(
                f"token {pos - 1} ({token!r}): unknown symbol"
            ) from None
        if not math.isfinite(value):
            raise PrefixParseError(f"token {pos - 1} ({token!r}): non-finite constant")
        return Const(value)

    tree = parse_node()
    if pos != len(tokens):
        raise fail("trailing tokens after complete expression")
    return tree
