"""Objective evaluation: prediction RMSE over a dataset plus tree size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import exprtree
from .dataio import EncodedDataset


class ObjectiveVector(NamedTuple):
    rmse: float
    size: int


def rmse(tree: exprtree.Node, data: EncodedDataset) -> float:
    """Root-mean-square prediction error over the dataset.

    The squared-error sum uses numpy's pairwise block reduction (fixed
    order), which keeps accumulation error logarithmic even at 60k rows.
    Predictions are finite by construction; a non-finite sum indicates an
    arithmetic-overflow tree and is reported rather than masked.
    """
    n = len(data)
    if n == 0:
        raise ValueError("rmse over an empty dataset is undefined")
    err = exprtree.evaluate_batch(tree, data.inputs) - data.targets
    total = float(np.sum(err * err))
    if not math.isfinite(total):
        raise ArithmeticError(
            f"non-finite squared-error sum for tree {exprtree.to_prefix(tree)}"
        )
    return math.sqrt(total / n)


def objective_vector(tree: exprtree.Node, data: EncodedDataset) -> ObjectiveVector:
    return ObjectiveVector(rmse(tree, data), exprtree.size(tree))


@dataclass
class Individual:
    """A tree plus its cached objective vectors.

    Trees are immutable, so the cached objectives can never go stale;
    variation always produces a fresh Individual.
    """

    tree: exprtree.Node
    objectives_fitness: ObjectiveVector
    objectives_validation: Optional[ObjectiveVector] = None
    _prefix: Optional[str] = field(default=None, repr=False, compare=False)

    @property
    def prefix(self) -> str:
        if self._prefix is None:
            self._prefix = exprtree.to_prefix(self.tree)
        return self._prefix

    @property
    def size(self) -> int:
        return self.objectives_fitness.size


def evaluate_individual(tree: exprtree.Node, data: EncodedDataset) -> Individual:
    return Individual(tree, objective_vector(tree, data))
