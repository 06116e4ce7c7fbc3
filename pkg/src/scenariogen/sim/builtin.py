"""Deterministic desk-scale world: an ego vehicle with a simple AEB policy and
pedestrians walking waypoint paths.

The ego drives in a straight line from its start to its destination at cruise
speed.  It brakes when a pedestrian is ahead within the (weather- and
light-degraded) detection range and inside a lateral corridor.  Motion is in
the x/z plane; elevation is carried through unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..evaluator import ScenarioEvaluator
from ..objective import CollisionEvent, SimulationTrace
from ..scenario import ConcreteScenario, EnvironmentState, ScenarioError, ScenarioTemplate


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    cruise_speed: float = 10.0
    max_accel: float = 3.0
    max_decel: float = 6.0
    detection_range: float = 30.0
    detection_fov_half_width: float = 2.5
    wetness_brake_penalty: float = 0.4
    weather_visibility_penalty: float = 0.6
    night_visibility_penalty: float = 0.3
    ego_radius: float = 1.0
    pedestrian_radius: float = 0.3

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        for name in ("wetness_brake_penalty", "weather_visibility_penalty", "night_visibility_penalty"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if not (self.ego_radius > 0 and self.pedestrian_radius > 0):
            raise ValueError("radii must be > 0")
        if self.cruise_speed < 0 or self.max_decel < 0 or self.max_accel < 0 or self.detection_range < 0:
            raise ValueError("speeds, accelerations and ranges must be >= 0")

    @property
    def contact_distance(self) -> float:
        return self.ego_radius + self.pedestrian_radius


def darkness(time_of_day: float) -> float:
    """0 in daylight (07:00-17:00), 1 from 22:00 to 02:00, linear in between."""
    t = time_of_day % 24.0
    if 7.0 <= t <= 17.0:
        return 0.0
    if 17.0 < t < 22.0:
        return (t - 17.0) / 5.0
    if 2.0 < t < 7.0:
        return (7.0 - t) / 5.0
    return 1.0


def effective_range(env: EnvironmentState, cfg: SimConfig) -> float:
    obscured = min(1.0, max(0.0, env.rain + env.fog))
    return (cfg.detection_range
            * (1.0 - cfg.weather_visibility_penalty * obscured)
            * (1.0 - cfg.night_visibility_penalty * darkness(env.time_of_day)))


def effective_decel(env: EnvironmentState, cfg: SimConfig) -> float:
    return cfg.max_decel * (1.0 - cfg.wetness_brake_penalty * env.wetness)


@dataclass
class AgentState:
    position: tuple[float, float, float]
    speed: float
    waypoints: tuple[tuple[float, float, float], ...]
    target: int = 1
    is_pedestrian: bool = True


@dataclass
class WorldState:
    ego_position: tuple[float, float, float]
    ego_speed: float
    heading: tuple[float, float]
    destination: tuple[float, float, float]
    agents: list[AgentState] = field(default_factory=list)
    environment: EnvironmentState = field(default_factory=EnvironmentState)
    step_index: int = 1
    halted: bool = False
    arrived: bool = False


def _forward_unit(start, dest) -> tuple[float, float]:
    ux = dest[0] - start[0]
    uz = dest[2] - start[2]
    norm = math.sqrt(ux * ux + uz * uz)
    if norm == 0.0:
        raise ScenarioError("ego destination coincides with start in the x/z plane")
    return ux / norm, uz / norm


def ego_policy_step(state: WorldState, cfg: SimConfig) -> float:
    """Acceleration command (m/s^2) for the next step."""
    if state.halted or state.arrived:
        return 0.0
    rng = effective_range(state.environment, cfg)
    ux, uz = state.heading
    ex, _, ez = state.ego_position
    for agent in state.agents:
        if not agent.is_pedestrian:
            continue
        rx = agent.position[0] - ex
        rz = agent.position[2] - ez
        fwd = rx * ux + rz * uz
        lat = abs(rx * uz - rz * ux)
        if 0.0 < fwd <= rng and lat <= cfg.detection_fov_half_width:
            return -effective_decel(state.environment, cfg)
    if state.ego_speed < cfg.cruise_speed:
        return cfg.max_accel
    return 0.0


def pedestrian_step(agent: AgentState, dt: float) -> tuple[float, float, float]:
    """Advance toward the current waypoint; snap and retarget on arrival."""
    if agent.target >= len(agent.waypoints):
        return agent.position
    step = agent.speed * dt
    goal = agent.waypoints[agent.target]
    rx, ry, rz = (goal[i] - agent.position[i] for i in range(3))
    d = math.sqrt(rx * rx + ry * ry + rz * rz)
    if d <= step:
        agent.target += 1
        agent.position = tuple(goal)
    else:
        agent.position = (agent.position[0] + rx / d * step,
                          agent.position[1] + ry / d * step,
                          agent.position[2] + rz / d * step)
    return agent.position


def detect_collisions(state: WorldState, cfg: SimConfig) -> list[int]:
    """Indices of pedestrians in contact with the ego (x/z distance)."""
    ex, _, ez = state.ego_position
    hits = []
    for i, agent in enumerate(state.agents):
        if not agent.is_pedestrian:
            continue
        dx = agent.position[0] - ex
        dz = agent.position[2] - ez
        if math.sqrt(dx * dx + dz * dz) < cfg.contact_distance:
            hits.append(i)
    return hits


def step_count(duration_s: float, dt: float) -> int:
    # tolerance keeps 3.0 / 0.1 == 30.000000000000004 at 30 steps
    return max(1, math.ceil(duration_s / dt - 1e-9))


def agent_id(index: int) -> str:
    return f"agent{index}"


def _pack(t: ScenarioTemplate):
    agents = t.agents
    offsets = np.zeros(len(agents) + 1, dtype=np.int64)
    for i, a in enumerate(agents):
        offsets[i + 1] = offsets[i] + len(a.waypoints)
    waypoints = np.array([w for a in agents for w in a.waypoints], dtype=np.float64).reshape(-1, 3)
    speeds = np.array([a.speed for a in agents], dtype=np.float64)
    is_ped = np.array([a.kind == "pedestrian" for a in agents], dtype=np.uint8)
    return waypoints, offsets, speeds, is_ped


def simulate(s: ConcreteScenario | ScenarioTemplate, cfg: SimConfig = SimConfig(),
             seed: int = 0) -> SimulationTrace:
    """Run the scenario for ``ceil(duration_s / dt)`` steps.

    The trace holds the initial state plus one snapshot per step.  ``seed`` is
    accepted for interface stability; the dynamics are deterministic.
    """
    t = s.template if isinstance(s, ConcreteScenario) else s
    if any(not a.waypoints for a in t.agents):
        raise ScenarioError("every agent needs at least one waypoint")
    _forward_unit(t.ego_start, t.ego_destination)
    n_steps = step_count(t.duration_s, cfg.dt)
    waypoints, offsets, speeds, is_ped = _pack(t)
    ego, agents, c_steps, c_agents = _kernels.simulate_kernel(
        np.array(t.ego_start[:3], dtype=np.float64),
        np.array(t.ego_destination, dtype=np.float64),
        waypoints, offsets, speeds, is_ped,
        float(cfg.dt), float(cfg.cruise_speed), float(cfg.max_accel),
        float(effective_decel(t.environment, cfg)), float(effective_range(t.environment, cfg)),
        float(cfg.detection_fov_half_width), float(cfg.contact_distance), int(n_steps),
    )
    collisions = tuple(
        CollisionEvent(int(step), agent_id(int(a)), tuple(ego[step - 1].tolist()))
        for step, a in zip(c_steps, c_agents)
    )
    return SimulationTrace(
        step_indices=np.arange(1, n_steps + 2, dtype=np.int64),
        ego_positions=ego,
        agent_ids=tuple(agent_id(i) for i in range(len(t.agents))),
        agent_positions=agents,
        collisions=collisions,
    )


class BuiltinEvaluator(ScenarioEvaluator):
    supports_concurrent_evaluation = True

    def __init__(self, template, space, sim_config: SimConfig = SimConfig(), seed: int = 0,
                 accident_weight: float | None = None):
        if accident_weight is None:
            super().__init__(template, space)
        else:
            super().__init__(template, space, accident_weight)
        self.sim_config = sim_config
        self.seed = seed

    def run(self, scenario: ConcreteScenario) -> SimulationTrace:
        return simulate(scenario, self.sim_config, self.seed)
