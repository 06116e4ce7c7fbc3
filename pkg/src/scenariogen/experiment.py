"""Shared experiment plumbing for the CLI and the acceptance suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib.resources import files
from pathlib import Path

from .analysis import compare_runs, detect_failures, diversity
from .evaluator import ScenarioEvaluator
from .scenario import ParameterSpace, ScenarioTemplate, parse_template
from .search import GAConfig, SearchResult, run_ga, run_random

BUNDLED_SCENARIO = "pedestrian_crossing.json"


def bundled_scenario_text(name: str = BUNDLED_SCENARIO) -> str:
    return files("scenariogen.data").joinpath(name).read_text(encoding="utf-8")


def load_template(path: str | Path | None = None) -> ScenarioTemplate:
    if path is None:
        return parse_template(bundled_scenario_text())
    return parse_template(Path(path).read_text(encoding="utf-8"))


def destination_from_forward_right(template: ScenarioTemplate, forward: float,
                                   right: float) -> ScenarioTemplate:
    """Place the destination relative to the ego start pose.

    Heading ``h`` points forward along ``(cos h, sin h)`` in the x/z plane;
    right is ``(sin h, -cos h)``.
    """
    x, y, z, heading = template.ego_start
    dest = (x + forward * math.cos(heading) + right * math.sin(heading),
            y,
            z + forward * math.sin(heading) - right * math.cos(heading))
    return replace(template, ego_destination=dest)


@dataclass
class PairOutcome:
    ga: SearchResult
    random: SearchResult

    @property
    def ga_failures(self) -> int:
        return len(detect_failures(self.ga.evaluations))

    @property
    def random_failures(self) -> int:
        return len(detect_failures(self.random.evaluations))

    def diversity_means(self) -> tuple[float, float]:
        return (diversity(detect_failures(self.ga.evaluations)).mean,
                diversity(detect_failures(self.random.evaluations)).mean)

    def comparison(self) -> dict:
        return compare_runs(self.ga, self.random)


def pair_seeds(seed: int, repeats: int) -> list[tuple[int, int]]:
    """(GA seed, random seed) per repetition: ``(s, s + 1)`` with ``s = seed + 2k``."""
    return [(seed + 2 * k, seed + 2 * k + 1) for k in range(repeats)]


def run_pair(space: ParameterSpace, evaluator: ScenarioEvaluator, ga_cfg: GAConfig,
             ga_seed: int, random_seed: int, max_workers: int = 1) -> PairOutcome:
    ga = run_ga(space, evaluator, replace(ga_cfg, seed=ga_seed), max_workers)
    rnd = run_random(space, evaluator, ga_cfg.eval_budget, random_seed, max_workers)
    return PairOutcome(ga, rnd)
