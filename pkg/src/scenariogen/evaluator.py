"""The runner/simulator seam: turn a noise vector into a score and a trace."""
from __future__ import annotations

from typing import Protocol, Sequence

from .objective import ACCIDENT_WEIGHT, ObjectiveScore, SimulationTrace, score_trace
from .scenario import ConcreteScenario, ParameterSpace, ScenarioTemplate, realize


class EvaluationError(RuntimeError):
    """A single evaluation failed; search assigns the worst score and moves on."""


class Evaluator(Protocol):
    supports_concurrent_evaluation: bool

    def evaluate(self, vector: Sequence[float]) -> tuple[ObjectiveScore, SimulationTrace]: ...


class ScenarioEvaluator:
    """Realizes noise vectors against a base template and scores the resulting trace.

    Subclasses implement :meth:`run`.
    """

    supports_concurrent_evaluation = False

    def __init__(self, template: ScenarioTemplate, space: ParameterSpace,
                 accident_weight: float = ACCIDENT_WEIGHT):
        self.template = template
        self.space = space
        self.accident_weight = accident_weight

    def run(self, scenario: ConcreteScenario) -> SimulationTrace:
        raise NotImplementedError

    def evaluate(self, vector: Sequence[float]) -> tuple[ObjectiveScore, SimulationTrace]:
        scenario = realize(self.template, self.space, vector)
        trace = self.run(scenario)
        return score_trace(trace, self.accident_weight), trace
