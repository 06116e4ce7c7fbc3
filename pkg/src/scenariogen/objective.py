"""Simulation traces and the scalar safety objective.

``E = ego_agents_distance - journey_distance - accident_weight * acc``; lower
values mark more dangerous, and therefore more valuable, scenarios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels

ACCIDENT_WEIGHT = 1000.0


class TraceError(ValueError):
    """A trace violates its structural invariants."""


@dataclass(frozen=True)
class CollisionEvent:
    step_index: int
    agent_id: str
    ego_pos: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class Snapshot:
    step_index: int
    ego_pos: tuple[float, float, float]
    agent_positions: tuple[tuple[str, tuple[float, float, float]], ...]


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """Per-step ego and agent positions plus raw (per-step) contact events.

    Positions are stored as arrays: ``ego_positions`` is ``(S, 3)`` and
    ``agent_positions`` is ``(S, A, 3)`` with agents ordered as ``agent_ids``.
    """

    step_indices: np.ndarray
    ego_positions: np.ndarray
    agent_ids: tuple[str, ...]
    agent_positions: np.ndarray
    collisions: tuple[CollisionEvent, ...] = field(default=())

    def __post_init__(self) -> None:
        steps = np.ascontiguousarray(self.step_indices, dtype=np.int64)
        ego = np.ascontiguousarray(self.ego_positions, dtype=np.float64)
        agents = np.ascontiguousarray(self.agent_positions, dtype=np.float64)
        if agents.size == 0:
            agents = agents.reshape(len(ego), len(self.agent_ids), 3)
        object.__setattr__(self, "step_indices", steps)
        object.__setattr__(self, "ego_positions", ego)
        object.__setattr__(self, "agent_positions", agents)
        object.__setattr__(self, "agent_ids", tuple(self.agent_ids))
        object.__setattr__(self, "collisions", tuple(self.collisions))
        self.validate()

    def validate(self) -> None:
        n = len(self.step_indices)
        if n == 0:
            raise TraceError("trace has no steps")
        if self.ego_positions.shape != (n, 3):
            raise TraceError(f"ego positions must have shape ({n}, 3)")
        if self.agent_positions.shape != (n, len(self.agent_ids), 3):
            raise TraceError("agent positions do not match step count and agent ids")
        if len(set(self.agent_ids)) != len(self.agent_ids):
            raise TraceError("agent ids must be unique")
        if self.step_indices[0] < 1 or np.any(np.diff(self.step_indices) <= 0):
            raise TraceError("step indices must start at >= 1 and strictly increase")
        if not (np.all(np.isfinite(self.ego_positions)) and np.all(np.isfinite(self.agent_positions))):
            raise TraceError("positions must be finite")
        first, last = int(self.step_indices[0]), int(self.step_indices[-1])
        known = set(self.agent_ids)
        for ev in self.collisions:
            if not first <= ev.step_index <= last:
                raise TraceError(f"collision step {ev.step_index} outside trace range")
            if ev.agent_id not in known:
                raise TraceError(f"collision with unknown agent {ev.agent_id!r}")

    @classmethod
    def from_snapshots(cls, snapshots: Sequence[Snapshot],
                       collisions: Sequence[CollisionEvent] = ()) -> "SimulationTrace":
        if not snapshots:
            raise TraceError("trace has no steps")
        ids = tuple(aid for aid, _ in snapshots[0].agent_positions)
        for snap in snapshots:
            if tuple(aid for aid, _ in snap.agent_positions) != ids:
                raise TraceError(f"snapshot {snap.step_index} lists different agents")
        return cls(
            step_indices=np.array([s.step_index for s in snapshots], dtype=np.int64),
            ego_positions=np.array([s.ego_pos for s in snapshots], dtype=float).reshape(-1, 3),
            agent_ids=ids,
            agent_positions=np.array(
                [[p for _, p in s.agent_positions] for s in snapshots], dtype=float
            ).reshape(len(snapshots), len(ids), 3),
            collisions=tuple(collisions),
        )

    @property
    def snapshots(self) -> list[Snapshot]:
        return [
            Snapshot(
                int(i),
                tuple(self.ego_positions[k].tolist()),
                tuple((aid, tuple(self.agent_positions[k, a].tolist()))
                      for a, aid in enumerate(self.agent_ids)),
            )
            for k, i in enumerate(self.step_indices)
        ]

    def __len__(self) -> int:
        return len(self.step_indices)


@dataclass(frozen=True)
class ObjectiveScore:
    ego_agents_distance: float
    journey_distance: float
    acc: int
    e_value: float

    @classmethod
    def worst(cls) -> "ObjectiveScore":
        """Sentinel for evaluations that did not produce a trace."""
        return cls(0.0, 0.0, 0, math.inf)

    @property
    def is_failure(self) -> bool:
        return self.acc >= 1


def euclid(p1: Sequence[float], p2: Sequence[float]) -> float:
    dx = p1[0] - p2[0]
    dy = p1[1] - p2[1]
    dz = p1[2] - p2[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def ego_agents_distance(t: SimulationTrace) -> float:
    if not t.agent_ids:
        return 0.0
    return float(_kernels.ego_agents_distance(t.ego_positions, t.agent_positions))


def journey_distance(t: SimulationTrace) -> float:
    """Straight-line displacement of the ego from the first to the final step."""
    return euclid(t.ego_positions[0].tolist(), t.ego_positions[-1].tolist())


def count_accidents(t: SimulationTrace) -> int:
    """Count maximal runs of consecutive contact steps, per agent."""
    steps_by_agent: dict[str, set[int]] = {}
    for ev in t.collisions:
        steps_by_agent.setdefault(ev.agent_id, set()).add(ev.step_index)
    count = 0
    for steps in steps_by_agent.values():
        prev = None
        for s in sorted(steps):
            if prev is None or s != prev + 1:
                count += 1
            prev = s
    return count


def combined(ego_agents: float, journey: float, acc: int,
             accident_weight: float = ACCIDENT_WEIGHT) -> ObjectiveScore:
    return ObjectiveScore(ego_agents, journey, acc, ego_agents - journey - accident_weight * acc)


def score_trace(t: SimulationTrace, accident_weight: float = ACCIDENT_WEIGHT) -> ObjectiveScore:
    return combined(ego_agents_distance(t), journey_distance(t), count_accidents(t), accident_weight)
