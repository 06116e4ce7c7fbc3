"""Scenario templates, the perturbation parameter space and noise-vector scaling.

A base scenario is perturbed by a noise vector whose elements live in
``[-1, +1]``.  Each element addresses one :class:`ParameterSpec`; the
affine map ``S = (N + 1) * (r_max - r_min) / 2 + r_min`` turns it into a
concrete parameter value.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

AGENT_KINDS = ("pedestrian", "vehicle")
WEATHER_FIELDS = ("rain", "fog", "wetness", "cloudiness", "road_damage")


class ScenarioError(ValueError):
    """Raised for malformed scenario documents or invalid parameter data."""


class EmptySearchSpaceError(ScenarioError):
    """Raised when every noise range is zero and nothing can be perturbed."""

    def __init__(self) -> None:
        super().__init__("empty search space: every noise range is zero")


Vec3 = tuple[float, float, float]


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class EnvironmentState:
    time_of_day: float = 12.0
    rain: float = 0.0
    fog: float = 0.0
    wetness: float = 0.0
    cloudiness: float = 0.0
    road_damage: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "time_of_day", float(self.time_of_day) % 24.0)
        for name in WEATHER_FIELDS:
            object.__setattr__(self, name, _clamp01(float(getattr(self, name))))


@dataclass(frozen=True)
class AgentTemplate:
    kind: str
    color: Vec3
    speed: float
    waypoints: tuple[Vec3, ...]

    def __post_init__(self) -> None:
        if self.kind not in AGENT_KINDS:
            raise ScenarioError(f"unknown agent kind {self.kind!r}")
        if not self.speed >= 0.0:
            raise ScenarioError(f"agent speed must be >= 0, got {self.speed}")
        if any(not 0.0 <= c <= 1.0 for c in self.color):
            raise ScenarioError(f"color channels must lie in [0, 1], got {self.color}")
        if not self.waypoints:
            raise ScenarioError("agent needs at least one waypoint")


@dataclass(frozen=True)
class ScenarioTemplate:
    map_name: str
    ego_start: tuple[float, float, float, float]
    ego_destination: Vec3
    agents: tuple[AgentTemplate, ...]
    environment: EnvironmentState = field(default_factory=EnvironmentState)
    duration_s: float = 10.0

    def __post_init__(self) -> None:
        if tuple(self.ego_start[:3]) == tuple(self.ego_destination):
            raise ScenarioError("ego destination must differ from ego start")
        if not self.duration_s > 0.0:
            raise ScenarioError(f"duration_s must be > 0, got {self.duration_s}")


@dataclass(frozen=True)
class NoiseConfig:
    """Maximum absolute change per parameter family; zero drops the family."""

    pos_noise_range_xz: float = 2.0
    color_noise_range_rgb: float = 0.2
    weather_noise_range: float = 0.3
    time_max_noise: float = 5.0
    speed_max_noise: float = 0.5

    def __post_init__(self) -> None:
        for name in ("pos_noise_range_xz", "color_noise_range_rgb", "weather_noise_range",
                     "time_max_noise", "speed_max_noise"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ParameterSpec:
    id: str
    base_value: float
    r_min: float
    r_max: float
    hard_min: float | None = None
    hard_max: float | None = None

    def __post_init__(self) -> None:
        if not self.r_min < self.r_max:
            raise ScenarioError(f"{self.id}: r_min must be < r_max")
        if not self.r_min <= self.base_value <= self.r_max:
            raise ScenarioError(f"{self.id}: base value outside [r_min, r_max]")

    @classmethod
    def around(cls, id: str, base: float, delta: float,
               hard_min: float | None = None, hard_max: float | None = None) -> "ParameterSpec":
        lo, hi = base - delta, base + delta
        if hard_min is not None:
            lo = max(lo, hard_min)
        if hard_max is not None:
            hi = min(hi, hard_max)
        return cls(id, base, lo, hi, hard_min, hard_max)


@dataclass(frozen=True)
class ParameterSpace:
    specs: tuple[ParameterSpec, ...]

    def __post_init__(self) -> None:
        ids = [s.id for s in self.specs]
        if len(set(ids)) != len(ids):
            raise ScenarioError("parameter ids must be unique")

    @property
    def m(self) -> int:
        return len(self.specs)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.specs]

    def require_nonempty(self) -> None:
        if self.m == 0:
            raise EmptySearchSpaceError()


@dataclass(frozen=True)
class ConcreteScenario:
    """A realized test scenario.

    ``template`` holds the perturbed scenario the simulator runs, ``applied_values``
    the scaled parameter values and ``noise_vector`` the genotype they came from.
    """

    template: ScenarioTemplate
    applied_values: Mapping[str, float]
    noise_vector: tuple[float, ...]


# --------------------------------------------------------------------------
# JSON I/O


def _path_error(path: str, msg: str) -> ScenarioError:
    return ScenarioError(f"{path}: {msg}")


def _number(obj: Any, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise _path_error(path, f"expected a number, got {type(obj).__name__}")
    value = float(obj)
    if not math.isfinite(value):
        raise _path_error(path, "expected a finite number")
    return value


def _vector(obj: Any, n: int, path: str) -> tuple[float, ...]:
    if not isinstance(obj, list) or len(obj) != n:
        raise _path_error(path, f"expected an array of {n} numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(obj))


def _object(obj: Any, path: str) -> dict:
    if not isinstance(obj, dict):
        raise _path_error(path, "expected an object")
    return obj


def _key(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise _path_error(path, f"missing key {key!r}")
    return obj[key]


def template_from_obj(doc: Any) -> ScenarioTemplate:
    doc = _object(doc, "$")
    map_name = _key(doc, "map", "$")
    if not isinstance(map_name, str):
        raise _path_error("$.map", "expected a string")
    ego = _object(_key(doc, "ego", "$"), "$.ego")
    start = _vector(_key(ego, "start", "$.ego"), 4, "$.ego.start")
    dest = _vector(_key(ego, "destination", "$.ego"), 3, "$.ego.destination")

    raw_agents = _key(doc, "agents", "$")
    if not isinstance(raw_agents, list):
        raise _path_error("$.agents", "expected an array")
    agents = []
    for i, raw in enumerate(raw_agents):
        p = f"$.agents[{i}]"
        raw = _object(raw, p)
        kind = _key(raw, "kind", p)
        wps = _key(raw, "waypoints", p)
        if not isinstance(wps, list):
            raise _path_error(f"{p}.waypoints", "expected an array")
        waypoints = tuple(_vector(w, 3, f"{p}.waypoints[{j}]") for j, w in enumerate(wps))
        try:
            agents.append(AgentTemplate(
                kind=kind,
                color=_vector(_key(raw, "color", p), 3, f"{p}.color"),
                speed=_number(_key(raw, "speed", p), f"{p}.speed"),
                waypoints=waypoints,
            ))
        except ScenarioError as exc:
            if str(exc).startswith("$"):
                raise
            raise _path_error(p, str(exc)) from None

    env_raw = _object(_key(doc, "environment", "$"), "$.environment")
    env = EnvironmentState(**{
        name: _number(_key(env_raw, name, "$.environment"), f"$.environment.{name}")
        for name in ("time_of_day",) + WEATHER_FIELDS
    })
    duration = _number(_key(doc, "duration_s", "$"), "$.duration_s")
    try:
        return ScenarioTemplate(map_name, start, dest, tuple(agents), env, duration)
    except ScenarioError as exc:
        raise _path_error("$", str(exc)) from None


def parse_document(text: str) -> tuple[ScenarioTemplate, tuple[float, ...] | None]:
    """Parse a scenario document, returning the template and its optional noise vector."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    template = template_from_obj(doc)
    noise = None
    if isinstance(doc, dict) and doc.get("noise_vector") is not None:
        raw = doc["noise_vector"]
        if not isinstance(raw, list):
            raise _path_error("$.noise_vector", "expected an array")
        noise = tuple(_number(v, f"$.noise_vector[{i}]") for i, v in enumerate(raw))
    return template, noise


def parse_template(text: str) -> ScenarioTemplate:
    return parse_document(text)[0]


def template_to_obj(t: ScenarioTemplate) -> dict:
    env = t.environment
    return {
        "map": t.map_name,
        "ego": {"start": list(t.ego_start), "destination": list(t.ego_destination)},
        "agents": [
            {
                "kind": a.kind,
                "color": list(a.color),
                "speed": a.speed,
                "waypoints": [list(w) for w in a.waypoints],
            }
            for a in t.agents
        ],
        "environment": {name: getattr(env, name) for name in ("time_of_day",) + WEATHER_FIELDS},
        "duration_s": t.duration_s,
    }


def serialize_template(t: ScenarioTemplate, noise_vector: Sequence[float] | None = None) -> str:
    obj = template_to_obj(t)
    if noise_vector is not None:
        obj["noise_vector"] = [float(v) for v in noise_vector]
    # json emits repr() floats, which round-trip exactly
    return json.dumps(obj, indent=2) + "\n"


def serialize_scenario(s: ConcreteScenario) -> str:
    return serialize_template(s.template, s.noise_vector)


# --------------------------------------------------------------------------
# parameter space


def build_parameter_space(template: ScenarioTemplate, cfg: NoiseConfig) -> ParameterSpace:
    """Walk the template in a fixed order and emit one spec per perturbable value.

    Per agent (declaration order): waypoint (x, z) pairs, then color (r, g, b),
    then speed.  After all agents: the five weather intensities, then time of day.
    """
    specs: list[ParameterSpec] = []
    for i, agent in enumerate(template.agents):
        if cfg.pos_noise_range_xz > 0:
            for j, (x, _y, z) in enumerate(agent.waypoints):
                specs.append(ParameterSpec.around(f"agent{i}.waypoint{j}.x", x, cfg.pos_noise_range_xz))
                specs.append(ParameterSpec.around(f"agent{i}.waypoint{j}.z", z, cfg.pos_noise_range_xz))
        if cfg.color_noise_range_rgb > 0:
            for channel, value in zip("rgb", agent.color):
                specs.append(ParameterSpec.around(
                    f"agent{i}.color.{channel}", value, cfg.color_noise_range_rgb, 0.0, 1.0))
        if cfg.speed_max_noise > 0:
            specs.append(ParameterSpec.around(f"agent{i}.speed", agent.speed, cfg.speed_max_noise, 0.0))
    env = template.environment
    if cfg.weather_noise_range > 0:
        for name in WEATHER_FIELDS:
            specs.append(ParameterSpec.around(
                f"env.{name}", getattr(env, name), cfg.weather_noise_range, 0.0, 1.0))
    if cfg.time_max_noise > 0:
        specs.append(ParameterSpec.around("env.time_of_day", env.time_of_day, cfg.time_max_noise))
    return ParameterSpace(tuple(specs))


def validate_vector(v: Sequence[float], space: ParameterSpace) -> tuple[float, ...]:
    if len(v) != space.m:
        raise ScenarioError(f"noise vector has length {len(v)}, expected {space.m}")
    out = tuple(float(x) for x in v)
    for i, x in enumerate(out):
        if not -1.0 <= x <= 1.0:
            raise ScenarioError(f"noise vector element {i} = {x} outside [-1, 1]")
    return out


def scale_value(n: float, spec: ParameterSpec) -> float:
    value = (n + 1) * (spec.r_max - spec.r_min) / 2 + spec.r_min
    if spec.hard_min is not None and value < spec.hard_min:
        value = spec.hard_min
    if spec.hard_max is not None and value > spec.hard_max:
        value = spec.hard_max
    return value


def scale(v: Sequence[float], space: ParameterSpace) -> dict[str, float]:
    v = validate_vector(v, space)
    return {spec.id: scale_value(n, spec) for n, spec in zip(v, space.specs)}


_ID_RE = re.compile(
    r"^agent(\d+)\.(?:waypoint(\d+)\.([xz])|color\.([rgb])|(speed))$|^env\.(\w+)$")


def apply(template: ScenarioTemplate, values: Mapping[str, float],
          v: Sequence[float] = ()) -> ConcreteScenario:
    """Return a new scenario with ``values`` written into a copy of ``template``."""
    agents = [
        {"color": list(a.color), "speed": a.speed, "waypoints": [list(w) for w in a.waypoints]}
        for a in template.agents
    ]
    env = {name: getattr(template.environment, name) for name in ("time_of_day",) + WEATHER_FIELDS}
    for key, value in values.items():
        m = _ID_RE.match(key)
        if m is None:
            raise ScenarioError(f"unknown parameter id {key!r}")
        agent_idx, wp_idx, axis, channel, speed, env_name = m.groups()
        if env_name is not None:
            if env_name not in env:
                raise ScenarioError(f"unknown parameter id {key!r}")
            env[env_name] = value
            continue
        a = int(agent_idx)
        if a >= len(agents):
            raise ScenarioError(f"unknown parameter id {key!r}")
        if wp_idx is not None:
            w = int(wp_idx)
            if w >= len(agents[a]["waypoints"]):
                raise ScenarioError(f"unknown parameter id {key!r}")
            agents[a]["waypoints"][w][0 if axis == "x" else 2] = value
        elif channel is not None:
            agents[a]["color"]["rgb".index(channel)] = value
        else:
            agents[a]["speed"] = value
    new_agents = tuple(
        replace(orig, color=tuple(d["color"]), speed=d["speed"],
                waypoints=tuple(tuple(w) for w in d["waypoints"]))
        for orig, d in zip(template.agents, agents)
    )
    realized = replace(template, agents=new_agents, environment=EnvironmentState(**env))
    return ConcreteScenario(realized, dict(values), tuple(float(x) for x in v))


def realize(template: ScenarioTemplate, space: ParameterSpace, v: Sequence[float]) -> ConcreteScenario:
    """Scale ``v`` over ``space`` and apply the result to ``template``."""
    return apply(template, scale(v, space), v)
