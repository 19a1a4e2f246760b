"""The three end-to-end searches: decomposition-based multi-objective GP,
Pareto-rank (fast-sort + crowding) multi-objective GP, and single-objective
GP. All share the tree genotype, the mutation-only operator mixture, and the
external non-dominated archive.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from random import Random
from typing import NamedTuple, Optional, Sequence

from . import exprtree, moo_core
from .dataio import EncodedDataset
from .evo_ops import OperatorConfig, mutate, tournament_select
from .fitness import Individual, ObjectiveVector, evaluate_individual, objective_vector
from .moo_core import ParetoArchive, archive_update


class WeightVector(NamedTuple):
    w_rmse: float
    w_size: float


class ReferencePoint(NamedTuple):
    """Componentwise-best (minimum) objective values observed so far."""

    z_rmse: float
    z_size: float


@dataclass
class Subproblem:
    """One scalarized subproblem: its weight vector, the best solution found
    for it so far, and the indices of its T nearest subproblems (self
    included) by weight-space distance."""

    index: int
    weight: WeightVector
    incumbent: Individual
    neighbors: tuple[int, ...]


@dataclass
class GenerationStats:
    generation: int
    best_rmse: float
    archive_size: int
    seconds: float
    evaluations: int


@dataclass
class RunResult:
    external_archive: ParetoArchive
    best_model: Individual
    trace: list[GenerationStats]
    evaluation_log: Optional[list[tuple[ObjectiveVector, str]]] = None


@dataclass(frozen=True)
class SearchConfig:
    """Shared optimizer configuration.

    ``neighborhood = 0`` resolves to max(2, ceil(0.1 * population)), the
    usual convention for decomposition neighborhoods.
    """

    operators: OperatorConfig = field(default_factory=OperatorConfig)
    population: int = 200
    generations: int = 50
    neighborhood: int = 0
    sgp_convergence_eps: float = 1e-6
    sgp_stall_generations: int = 5
    log_evaluations: bool = False

    def __post_init__(self):
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")
        T = self.resolved_neighborhood()
        if not 1 <= T <= self.population:
            raise ValueError(f"neighborhood {T} outside 1..{self.population}")
        if self.sgp_stall_generations < 1:
            raise ValueError("sgp_stall_generations must be >= 1")

    def resolved_neighborhood(self) -> int:
        if self.neighborhood == 0:
            return max(2, math.ceil(0.1 * self.population))
        return self.neighborhood


def uniform_weights(m: int) -> list[WeightVector]:
    """m weight vectors spread uniformly over the simplex w1 + w2 = 1:
    (i/(m-1), 1 - i/(m-1)) for i = 0..m-1."""
    if m < 2:
        raise ValueError(f"need at least 2 weight vectors, got {m}")
    return [WeightVector(i / (m - 1), 1.0 - i / (m - 1)) for i in range(m)]


def neighborhoods(weights: Sequence[WeightVector], T: int) -> list[tuple[int, ...]]:
    """For each weight vector, the indices of the T nearest weight vectors by
    Euclidean distance (self included); distance ties break to lower index."""
    m = len(weights)
    if not 1 <= T <= m:
        raise ValueError(f"T must be in 1..{m}, got {T}")
    result = []
    for i, wi in enumerate(weights):
        by_distance = sorted(
            range(m),
            key=lambda j: ((weights[j][0] - wi[0]) ** 2 + (weights[j][1] - wi[1]) ** 2, j),
        )
        result.append(tuple(by_distance[:T]))
    return result


def tchebycheff(f: ObjectiveVector, w: WeightVector, z: ReferencePoint) -> float:
    """Weighted-worst-deviation scalarization g = max_j w_j * (f_j - z_j),
    minimized, with z the ideal (componentwise-minimum) point.

    Rejects f < z componentwise: that means the reference point is stale.
    """
    if f[0] < z[0] or f[1] < z[1]:
        raise ValueError(f"objective {tuple(f)} below reference point {tuple(z)}")
    return max(w[0] * (f[0] - z[0]), w[1] * (f[1] - z[1]))


def update_reference(z: ReferencePoint, f: ObjectiveVector) -> ReferencePoint:
    return ReferencePoint(min(z[0], f[0]), min(z[1], f[1]))


def _initial_population(
    config: SearchConfig, fitness_set: EncodedDataset, rng: Random
) -> list[Individual]:
    trees = exprtree.ramped_half_and_half(
        rng, config.population, config.operators.init_depth, config.operators.primitives
    )
    return [evaluate_individual(t, fitness_set) for t in trees]


def _select_validated_best(
    archive: ParetoArchive, validation_set: EncodedDataset
) -> tuple[ParetoArchive, Individual]:
    """Evaluate every archive member on the validation set and pick the one
    with the lowest validation RMSE (ties: smaller tree, then insertion
    order). Returns the archive with validation objectives filled in."""
    validated = tuple(
        replace(member, objectives_validation=objective_vector(member.tree, validation_set))
        for member in archive.members
    )
    best = min(
        range(len(validated)),
        key=lambda i: (
            validated[i].objectives_validation.rmse,
            validated[i].objectives_fitness.size,
            i,
        ),
    )
    return ParetoArchive(validated), validated[best]


def moead_run(
    config: SearchConfig,
    fitness_set: EncodedDataset,
    validation_set: EncodedDataset,
    rng: Random,
    on_generation=None,
) -> RunResult:
    """Decomposition-based multi-objective GP.

    One scalar subproblem per weight vector; parents come from a panmictic
    tournament keyed on the subproblem's scalarized objective, offspring are
    produced by mutation only, each offspring updates the reference point,
    its subproblem's T nearest neighbors (replacement on strict scalar
    improvement), and the external archive. After the final generation the
    archive is re-ranked on the validation set.

    ``on_generation(gen, z, objectives)`` is an optional observer called
    after initialization (gen = -1) and after each generation with the
    current reference point and incumbent objective vectors.
    """
    if len(fitness_set) == 0 or len(validation_set) == 0:
        raise ValueError("fitness and validation sets must be non-empty")
    m = config.population
    weights = uniform_weights(m)
    nbhd = neighborhoods(weights, config.resolved_neighborhood())
    ops = config.operators

    initial = _initial_population(config, fitness_set, rng)
    subproblems = [
        Subproblem(i, weights[i], initial[i], nbhd[i]) for i in range(m)
    ]
    z = ReferencePoint(
        min(ind.objectives_fitness.rmse for ind in initial),
        min(ind.objectives_fitness.size for ind in initial),
    )
    archive = ParetoArchive()
    log = [] if config.log_evaluations else None
    for ind in initial:
        archive, _ = archive_update(archive, ind)
        if log is not None:
            log.append((ind.objectives_fitness, ind.prefix))
    if on_generation is not None:
        on_generation(-1, z, [sp.incumbent.objectives_fitness for sp in subproblems])

    population = [sp.incumbent for sp in subproblems]  # refreshed per offspring
    trace: list[GenerationStats] = []
    for gen in range(config.generations):
        started = time.perf_counter()
        for sp in subproblems:
            w_i = sp.weight
            z_now = z
            parent = tournament_select(
                population,
                lambda ind: tchebycheff(ind.objectives_fitness, w_i, z_now),
                rng,
                ops,
            )
            child = evaluate_individual(mutate(parent.tree, rng, ops), fitness_set)
            z = update_reference(z, child.objectives_fitness)
            for j in sp.neighbors:
                w_j = subproblems[j].weight
                if tchebycheff(child.objectives_fitness, w_j, z) < tchebycheff(
                    subproblems[j].incumbent.objectives_fitness, w_j, z
                ):
                    subproblems[j].incumbent = child
                    population[j] = child
            archive, _ = archive_update(archive, child)
            if log is not None:
                log.append((child.objectives_fitness, child.prefix))
        if on_generation is not None:
            on_generation(gen, z, [sp.incumbent.objectives_fitness for sp in subproblems])
        trace.append(
            GenerationStats(
                gen,
                min(sp.incumbent.objectives_fitness.rmse for sp in subproblems),
                len(archive),
                time.perf_counter() - started,
                m,
            )
        )

    archive, best = _select_validated_best(archive, validation_set)
    return RunResult(archive, best, trace, log)


def _rank_and_crowding(population: Sequence[Individual]):
    """Front index and crowding distance per individual of the population."""
    points = [ind.objectives_fitness for ind in population]
    fronts = moo_core.fast_nondominated_sort(points)
    rank = [0] * len(population)
    crowd = [0.0] * len(population)
    for front_index, front in enumerate(fronts):
        distances = moo_core.crowding_distance([points[i] for i in front])
        for i, d in zip(front, distances):
            rank[i] = front_index
            crowd[i] = d
    return rank, crowd, fronts


def nsga2_run(
    config: SearchConfig,
    fitness_set: EncodedDataset,
    validation_set: EncodedDataset,
    rng: Random,
) -> RunResult:
    """Pareto-rank multi-objective GP: fast non-dominated sorting plus
    crowding-distance truncation over merged parents and offspring, with the
    same mutation-only operators and the same external archive and final
    validation re-ranking as the decomposition variant."""
    if len(fitness_set) == 0 or len(validation_set) == 0:
        raise ValueError("fitness and validation sets must be non-empty")
    m = config.population
    ops = config.operators

    population = _initial_population(config, fitness_set, rng)
    archive = ParetoArchive()
    log = [] if config.log_evaluations else None
    for ind in population:
        archive, _ = archive_update(archive, ind)
        if log is not None:
            log.append((ind.objectives_fitness, ind.prefix))

    trace: list[GenerationStats] = []
    for gen in range(config.generations):
        started = time.perf_counter()
        rank, crowd, _ = _rank_and_crowding(population)
        meta = {id(ind): (rank[i], -crowd[i]) for i, ind in enumerate(population)}
        offspring = []
        for _ in range(m):
            parent = tournament_select(population, lambda ind: meta[id(ind)], rng, ops)
            child = evaluate_individual(mutate(parent.tree, rng, ops), fitness_set)
            offspring.append(child)
            archive, _ = archive_update(archive, child)
            if log is not None:
                log.append((child.objectives_fitness, child.prefix))
        merged = population + offspring
        merged_rank, merged_crowd, fronts = _rank_and_crowding(merged)
        survivors: list[Individual] = []
        for front in fronts:
            if len(survivors) + len(front) <= m:
                survivors.extend(merged[i] for i in front)
            else:
                by_crowding = sorted(front, key=lambda i: -merged_crowd[i])
                survivors.extend(merged[i] for i in by_crowding[: m - len(survivors)])
            if len(survivors) == m:
                break
        population = survivors
        trace.append(
            GenerationStats(
                gen,
                min(ind.objectives_fitness.rmse for ind in population),
                len(archive),
                time.perf_counter() - started,
                m,
            )
        )

    archive, best = _select_validated_best(archive, validation_set)
    return RunResult(archive, best, trace, log)


def sgp_run(
    config: SearchConfig,
    fitness_set: EncodedDataset,
    validation_set: EncodedDataset,
    rng: Random,
) -> RunResult:
    """Single-objective GP keyed on fitness-set RMSE (tree size only breaks
    ties), elitist and generational. Stops once the best RMSE has improved by
    less than the convergence epsilon for five consecutive generations, or at
    the generation cap. The returned archive holds the one validation-chosen
    model."""
    if len(fitness_set) == 0 or len(validation_set) == 0:
        raise ValueError("fitness and validation sets must be non-empty")
    m = config.population
    ops = config.operators

    population = _initial_population(config, fitness_set, rng)
    log = [] if config.log_evaluations else None
    if log is not None:
        log.extend((ind.objectives_fitness, ind.prefix) for ind in population)

    def generation_best(pop: Sequence[Individual]) -> Individual:
        index = min(
            range(len(pop)),
            key=lambda i: (pop[i].objectives_fitness.rmse, pop[i].objectives_fitness.size, i),
        )
        return pop[index]

    best = generation_best(population)
    best_validated = replace(
        best, objectives_validation=objective_vector(best.tree, validation_set)
    )
    previous_rmse = best.objectives_fitness.rmse
    stall = 0
    trace: list[GenerationStats] = []
    for gen in range(config.generations):
        started = time.perf_counter()
        next_population = [best]
        for _ in range(m - 1):
            parent = tournament_select(
                population, lambda ind: ind.objectives_fitness.rmse, rng, ops
            )
            child = evaluate_individual(mutate(parent.tree, rng, ops), fitness_set)
            next_population.append(child)
            if log is not None:
                log.append((child.objectives_fitness, child.prefix))
        population = next_population
        best = generation_best(population)
        candidate = replace(
            best, objectives_validation=objective_vector(best.tree, validation_set)
        )
        if candidate.objectives_validation.rmse < best_validated.objectives_validation.rmse or (
            candidate.objectives_validation.rmse == best_validated.objectives_validation.rmse
            and candidate.objectives_fitness.size < best_validated.objectives_fitness.size
        ):
            best_validated = candidate
        trace.append(
            GenerationStats(
                gen,
                best.objectives_fitness.rmse,
                1,
                time.perf_counter() - started,
                m - 1,
            )
        )
        if previous_rmse - best.objectives_fitness.rmse < config.sgp_convergence_eps:
            stall += 1
        else:
            stall = 0
        previous_rmse = best.objectives_fitness.rmse
        if stall >= config.sgp_stall_generations:
            break

    return RunResult(ParetoArchive((best_validated,)), best_validated, trace, log)
