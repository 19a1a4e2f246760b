"""Front-quality metrics (spread, coverage, front size) and RMSE statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fitness import ObjectiveVector
from .moo_core import dominates


@dataclass(frozen=True)
class FrontSnapshot:
    """A labelled set of mutually non-dominated objective vectors."""

    points: tuple[ObjectiveVector, ...]
    label: str = ""

    def __post_init__(self):
        for i, a in enumerate(self.points):
            for b in self.points:
                if dominates(b, a):
                    raise ValueError(
                        f"front {self.label!r} is not mutually non-dominated: "
                        f"{tuple(b)} dominates {tuple(a)}"
                    )

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class RmseStats:
    min: float
    max: float
    mean: float
    std: float  # population form (divisor n)


def delta_metric(
    front: FrontSnapshot,
    reference_extremes: Optional[tuple[ObjectiveVector, ObjectiveVector]] = None,
) -> float:
    """Spread of a front: (d_f + d_l + sum |d_j - mean|) / (d_f + d_l + |A|*mean)
    over consecutive Euclidean gaps after sorting by the first objective.

    d_f and d_l are the distances from the sorted front's two boundary points
    to the supplied reference extremes (paired low-end/high-end by first
    objective); without extremes they are 0, since the true front of this
    problem is unknown. 0 means perfectly uniform spacing.
    """
    if len(front) < 2:
        raise ValueError("spread needs at least 2 points")
    pts = np.asarray(sorted(front.points, key=lambda p: (p[0], p[1])), dtype=float)
    gaps = np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1))
    mean_gap = float(gaps.mean())
    d_f = d_l = 0.0
    if reference_extremes is not None:
        lo, hi = sorted(reference_extremes, key=lambda p: (p[0], p[1]))
        d_f = math.dist(lo, pts[0])
        d_l = math.dist(hi, pts[-1])
    numerator = d_f + d_l + float(np.abs(gaps - mean_gap).sum())
    denominator = d_f + d_l + len(front) * mean_gap
    if denominator == 0.0:
        return 0.0  # all points identical: trivially uniform
    return numerator / denominator


def c_metric(front_a: FrontSnapshot, front_b: FrontSnapshot) -> float:
    """Coverage of A by B: the fraction of A's points that some point of B
    strictly dominates. Not symmetric, and C(A,B) != 1 - C(B,A) in general."""
    if len(front_a) == 0:
        raise ValueError("coverage of an empty front is undefined")
    covered = sum(
        1 for a in front_a.points if any(dominates(b, a) for b in front_b.points)
    )
    return covered / len(front_a)


def nds(front: FrontSnapshot) -> int:
    """Number of non-dominated solutions in the front (its cardinality)."""
    return len(front)


def rmse_stats(values: Sequence[float]) -> RmseStats:
    if len(values) == 0:
        raise ValueError("statistics over an empty list")
    arr = np.asarray(values, dtype=float)
    return RmseStats(
        float(arr.min()), float(arr.max()), float(arr.mean()), float(arr.std())
    )
