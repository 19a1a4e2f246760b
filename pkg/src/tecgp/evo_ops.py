"""Selection and variation operators shared by all three search procedures."""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Callable, Sequence

from . import exprtree
from .exprtree import Const, Node, Op, PrimitiveSet, Var
from .fitness import Individual


@dataclass(frozen=True)
class OperatorConfig:
    tournament_size: int = 7
    p_subtree: float = 0.6
    max_depth: int = 12
    init_depth: int = 6
    primitives: PrimitiveSet = field(default_factory=PrimitiveSet)

    def __post_init__(self):
        if self.tournament_size < 1:
            raise ValueError(f"tournament_size must be >= 1, got {self.tournament_size}")
        if not 0.0 <= self.p_subtree <= 1.0:
            raise ValueError(f"p_subtree must be in [0, 1], got {self.p_subtree}")
        if not self.max_depth >= self.init_depth >= 1:
            raise ValueError(
                f"need max_depth >= init_depth >= 1, got {self.max_depth}/{self.init_depth}"
            )


def tournament_select(
    population: Sequence[Individual],
    key: Callable[[Individual], object],
    rng: Random,
    config: OperatorConfig,
) -> Individual:
    """Pick tournament_size individuals uniformly with replacement and return
    the one with the lowest key; exact key ties go to the smaller tree, and
    remaining ties to the earliest-sampled contender."""
    if not population:
        raise ValueError("tournament over an empty population")
    best = None
    best_rank = None
    for _ in range(config.tournament_size):
        contender = population[rng.randrange(len(population))]
        rank = (key(contender), contender.objectives_fitness.size)
        if best is None or rank < best_rank:
            best, best_rank = contender, rank
    return best


def _node_count(tree: Node) -> int:
    return exprtree.size(tree)


def _replace_at(tree: Node, target: int, builder: Callable[[Node, int], Node], depth: int = 0):
    """Rebuild the path to the preorder-indexed target node.

    Returns (new_subtree, nodes_consumed); builder receives the old node and
    its depth.
    """
    if target == 0:
        return builder(tree, depth), _node_count(tree)
    if not isinstance(tree, Op):
        return tree, 1
    left_new, left_n = _replace_at(tree.left, target - 1, builder, depth + 1)
    if target - 1 < left_n:
        return Op(tree.symbol, left_new, tree.right), 1 + left_n + _node_count(tree.right)
    right_new, right_n = _replace_at(tree.right, target - 1 - left_n, builder, depth + 1)
    return Op(tree.symbol, tree.left, right_new), 1 + left_n + right_n


def subtree_mutation(tree: Node, rng: Random, config: OperatorConfig) -> Node:
    """Replace one uniformly chosen node with a fresh grow subtree.

    The replacement is grown within the remaining depth budget
    (max_depth minus the chosen node's depth), so the result never exceeds
    the depth limit and no generate-and-reject loop is needed.
    """
    target = rng.randrange(exprtree.size(tree))

    def build(_old: Node, node_depth: int) -> Node:
        budget = config.max_depth - node_depth
        return exprtree.generate_grow(rng, budget, config.primitives)

    new_tree, _ = _replace_at(tree, target, build)
    return new_tree


def point_mutation(tree: Node, rng: Random, config: OperatorConfig) -> Node:
    """Swap one uniformly chosen node's symbol for a different same-arity one.

    Operators move to one of the other three operators; variables move to
    another variable or (when enabled) a fresh ephemeral constant; constants
    move to a variable. Shape, size, and depth are untouched.
    """
    target = rng.randrange(exprtree.size(tree))
    pset = config.primitives

    def build(old: Node, _node_depth: int) -> Node:
        if isinstance(old, Op):
            others = [s for s in exprtree.OPERATORS if s != old.symbol]
            return Op(others[rng.randrange(len(others))], old.left, old.right)
        if isinstance(old, Var):
            slots = [i for i in range(exprtree.N_VARIABLES) if i != old.index]
            if pset.constants:
                slots.append(exprtree.N_VARIABLES)
            slot = slots[rng.randrange(len(slots))]
            if slot == exprtree.N_VARIABLES:
                return Const(rng.uniform(pset.const_low, pset.const_high))
            return Var(slot)
        assert isinstance(old, Const)
        return Var(rng.randrange(exprtree.N_VARIABLES))

    new_tree, _ = _replace_at(tree, target, build)
    return new_tree


def mutate(tree: Node, rng: Random, config: OperatorConfig) -> Node:
    """The operator mixture: subtree mutation with probability p_subtree,
    point mutation otherwise."""
    if rng.random() < config.p_subtree:
        return subtree_mutation(tree, rng, config)
    return point_mutation(tree, rng, config)
