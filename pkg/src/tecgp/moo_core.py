"""Pareto mathematics: dominance, the non-dominated archive, fast
non-dominated sorting, and crowding distance (two objectives, minimized)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fitness import Individual, ObjectiveVector


def dominates(u: ObjectiveVector, v: ObjectiveVector) -> bool:
    """Strict Pareto dominance: no worse in both objectives, better in one."""
    return u[0] <= v[0] and u[1] <= v[1] and (u[0] < v[0] or u[1] < v[1])


@dataclass(frozen=True)
class ParetoArchive:
    """External population: mutually non-dominated individuals, in insertion
    order. Distinct trees with identical objective vectors are all retained;
    an exact duplicate (same tree, same objectives) is stored once."""

    members: tuple[Individual, ...] = ()

    def __len__(self) -> int:
        return len(self.members)

    def objective_vectors(self) -> list[ObjectiveVector]:
        return [m.objectives_fitness for m in self.members]


def archive_update(archive: ParetoArchive, candidate: Individual) -> tuple[ParetoArchive, bool]:
    """Insert a candidate unless an existing member dominates it, evicting
    every member the candidate dominates. Returns (new archive, accepted);
    accepted means the candidate belongs to the front (an already-present
    identical individual counts as accepted without a second copy)."""
    obj = candidate.objectives_fitness
    for member in archive.members:
        if dominates(member.objectives_fitness, obj):
            return archive, False
    kept = [m for m in archive.members if not dominates(obj, m.objectives_fitness)]
    for member in kept:
        if member.objectives_fitness == obj and member.prefix == candidate.prefix:
            return ParetoArchive(tuple(kept)), True
    kept.append(candidate)
    return ParetoArchive(tuple(kept)), True


def nondominated_filter(points: Sequence[ObjectiveVector]) -> list[int]:
    """Indices of points not strictly dominated by any other point."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return []
    le = (pts[:, None, :] <= pts[None, :, :]).all(axis=2)
    lt = (pts[:, None, :] < pts[None, :, :]).any(axis=2)
    dominated = (le & lt).any(axis=0)
    return [i for i in range(n) if not dominated[i]]


def fast_nondominated_sort(points: Sequence[ObjectiveVector]) -> list[list[int]]:
    """Partition indices into fronts: front 0 is the non-dominated set, front
    k the non-dominated set once earlier fronts are removed."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return []
    le = (pts[:, None, :] <= pts[None, :, :]).all(axis=2)
    lt = (pts[:, None, :] < pts[None, :, :]).any(axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    n_dominators = dom.sum(axis=0)
    fronts: list[list[int]] = []
    remaining = n_dominators.copy()
    assigned = np.zeros(n, dtype=bool)
    while not assigned.all():
        current = np.where((remaining == 0) & ~assigned)[0]
        fronts.append([int(i) for i in current])
        assigned[current] = True
        remaining = remaining - dom[current].sum(axis=0)
    return fronts


def crowding_distance(front: Sequence[ObjectiveVector]) -> list[float]:
    """Standard crowding distance over one front, in input order: boundary
    points per objective get +inf, interior points accumulate normalized
    neighbor gaps. A constant objective contributes nothing (no 0/0)."""
    pts = np.asarray(front, dtype=float)
    n = len(pts)
    if n == 0:
        raise ValueError("crowding distance over an empty front")
    distance = np.zeros(n)
    for m in range(pts.shape[1]):
        order = np.argsort(pts[:, m], kind="stable")
        lo, hi = pts[order[0], m], pts[order[-1], m]
        distance[order[0]] = distance[order[-1]] = float("inf")
        span = hi - lo
        if span == 0.0 or n <= 2:
            continue
        gaps = (pts[order[2:], m] - pts[order[:-2], m]) / span
        distance[order[1:-1]] += gaps
    return [float(d) for d in distance]
