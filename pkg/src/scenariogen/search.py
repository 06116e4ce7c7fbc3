"""Genetic algorithm and uniform-random baseline over noise vectors.

Both strategies minimize the objective ``E`` and count every evaluator call
against the evaluation budget.  The GA has no crossover: each generation draws
parents by tournament selection with replacement and mutates them with the
bounded polynomial operator.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .evaluator import EvaluationError, Evaluator
from .objective import ObjectiveScore, SimulationTrace, TraceError
from .scenario import EmptySearchSpaceError, ParameterSpace

log = logging.getLogger(__name__)

LOWER, UPPER = -1.0, 1.0


class ContractError(ValueError):
    """A search operator was called on inputs that violate its preconditions."""


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 10
    generations: int = 20
    mutation_rate: float = 0.95
    eta: float = 20.0
    tournament_size: int = 2
    eval_budget: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.eval_budget < 1:
            raise ValueError("eval_budget must be >= 1")


@dataclass
class Individual:
    genotype: tuple[float, ...]
    score: ObjectiveScore | None = None
    eval_index: int = -1


@dataclass(frozen=True)
class EvaluationRecord:
    eval_index: int
    strategy_name: str
    genotype: tuple[float, ...]
    score: ObjectiveScore
    collisions: tuple[tuple[int, str], ...] = ()
    error: str | None = None

    @property
    def is_failure(self) -> bool:
        return self.score.acc >= 1


@dataclass
class SearchResult:
    strategy_name: str
    config: dict[str, Any]
    evaluations: list[EvaluationRecord] = field(default_factory=list)
    best: Individual | None = None
    wall_time_s: float = 0.0


# --------------------------------------------------------------------------
# operators


def init_population(m: int, size: int, rng: np.random.Generator) -> list[Individual]:
    if m < 1:
        raise EmptySearchSpaceError()
    if size < 1:
        raise ValueError("population size must be >= 1")
    genes = rng.uniform(LOWER, UPPER, size=(size, m))
    return [Individual(tuple(row.tolist())) for row in genes]


def tournament_select(pop: Sequence[Individual], k: int, rng: np.random.Generator) -> Individual:
    """Best of ``k`` uniform draws with replacement; ties go to the lowest eval_index."""
    if not pop:
        raise ContractError("cannot select from an empty population")
    for ind in pop:
        if ind.score is None:
            raise ContractError("tournament over an unevaluated individual")
    draws = rng.integers(0, len(pop), size=k)
    contenders = [pop[int(i)] for i in draws]
    return min(contenders, key=lambda ind: (ind.score.e_value, ind.eval_index))


def mutate_gene(x: float, u: float, eta: float, lb: float = LOWER, ub: float = UPPER) -> float:
    """Bounded polynomial mutation of one gene for a given uniform draw ``u``."""
    span = ub - lb
    mut_pow = 1.0 / (eta + 1.0)
    if u < 0.5:
        delta1 = (x - lb) / span
        val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta1) ** (eta + 1.0)
        deltaq = val ** mut_pow - 1.0
    else:
        delta2 = (ub - x) / span
        val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta2) ** (eta + 1.0)
        deltaq = 1.0 - val ** mut_pow
    return min(ub, max(lb, x + deltaq * span))


def polynomial_mutation(g: Sequence[float], rate: float, eta: float, rng: np.random.Generator,
                        gene_prob: float | None = None) -> tuple[float, ...]:
    """Mutate ``g`` with probability ``rate``; each gene then mutates with ``gene_prob`` (1/m)."""
    m = len(g)
    if m == 0 or rng.random() >= rate:
        return tuple(g)
    p_gene = 1.0 / m if gene_prob is None else gene_prob
    out = list(g)
    for i in range(m):
        if rng.random() < p_gene:
            out[i] = mutate_gene(out[i], rng.random(), eta)
    return tuple(out)


# --------------------------------------------------------------------------
# strategies


class _Archive:
    """Evaluates genotypes in submission order, enforces the budget, tracks the best."""

    def __init__(self, evaluator: Evaluator, strategy: str, budget: int, max_workers: int = 1):
        self.evaluator = evaluator
        self.strategy = strategy
        self.budget = budget
        self.records: list[EvaluationRecord] = []
        self.best: Individual | None = None
        concurrent = getattr(evaluator, "supports_concurrent_evaluation", False)
        self.max_workers = max_workers if concurrent else 1

    @property
    def remaining(self) -> int:
        return self.budget - len(self.records)

    def _call(self, genotype):
        try:
            return self.evaluator.evaluate(genotype), None
        except (EvaluationError, TraceError) as exc:
            return None, str(exc)

    def evaluate(self, batch: list[Individual]) -> list[Individual]:
        batch = batch[: max(0, self.remaining)]
        if self.max_workers > 1 and len(batch) > 1:
            with ThreadPoolExecutor(self.max_workers) as pool:
                outcomes = list(pool.map(self._call, [ind.genotype for ind in batch]))
        else:
            outcomes = [self._call(ind.genotype) for ind in batch]
        for ind, (outcome, error) in zip(batch, outcomes):
            ind.eval_index = len(self.records)
            collisions: tuple = ()
            if outcome is None:
                log.warning("evaluation %d failed: %s", ind.eval_index, error)
                ind.score = ObjectiveScore.worst()
            else:
                ind.score, trace = outcome
                collisions = _collision_summary(trace)
            self.records.append(EvaluationRecord(
                ind.eval_index, self.strategy, ind.genotype, ind.score, collisions, error))
            if self.best is None or ind.score.e_value < self.best.score.e_value:
                self.best = ind
        return batch

    def result(self, config: dict, started: float) -> SearchResult:
        return SearchResult(self.strategy, config, self.records, self.best,
                            time.perf_counter() - started)


def _collision_summary(trace: SimulationTrace) -> tuple[tuple[int, str], ...]:
    return tuple((ev.step_index, ev.agent_id) for ev in trace.collisions)


def run_ga(space: ParameterSpace, evaluator: Evaluator, cfg: GAConfig = GAConfig(),
           max_workers: int = 1) -> SearchResult:
    space.require_nonempty()
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    archive = _Archive(evaluator, "genetic_algorithm", cfg.eval_budget, max_workers)

    population = archive.evaluate(init_population(space.m, cfg.population_size, rng))
    for gen in range(cfg.generations):
        if archive.remaining <= 0:
            break
        offspring = []
        for _ in range(cfg.population_size):
            parent = tournament_select(population, cfg.tournament_size, rng)
            child = polynomial_mutation(parent.genotype, cfg.mutation_rate, cfg.eta, rng)
            offspring.append(Individual(child))
        population = archive.evaluate(offspring)
        log.debug("generation %d: best E = %s", gen + 1, archive.best.score.e_value)
    return archive.result(asdict(cfg), started)


def run_random(space: ParameterSpace, evaluator: Evaluator, budget: int = 200, seed: int = 0,
               max_workers: int = 1) -> SearchResult:
    space.require_nonempty()
    if budget < 1:
        raise ValueError("budget must be >= 1")
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    archive = _Archive(evaluator, "random", budget, max_workers)
    archive.evaluate(init_population(space.m, budget, rng))
    return archive.result({"eval_budget": budget, "seed": seed}, started)


STRATEGIES = {"genetic_algorithm": run_ga, "random": run_random}


def best_e_value(result: SearchResult) -> float:
    return result.best.score.e_value if result.best else math.inf
