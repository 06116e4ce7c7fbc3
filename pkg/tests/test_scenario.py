import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import minimal_doc, minimal_json
from scenariogen.experiment import bundled_scenario_text
from scenariogen.scenario import (
    EmptySearchSpaceError, NoiseConfig, ParameterSpace, ParameterSpec, ScenarioError,
    apply, build_parameter_space, parse_document, parse_template, realize, scale, scale_value,
    serialize_scenario, serialize_template,
)


def test_parse_minimal_document():
    t = parse_template(minimal_json())
    assert t.map_name == "test"
    assert t.ego_start == (0.0, 0.0, 0.0, 0.0)
    assert len(t.agents) == 1
    assert t.agents[0].waypoints == ((20.0, 0.0, -5.0), (20.0, 0.0, 5.0))
    assert t.environment.time_of_day == 12.0


def test_negative_speed_rejected():
    doc = minimal_doc()
    doc["agents"][0]["speed"] = -1
    with pytest.raises(ScenarioError, match=r"agents\[0\]"):
        parse_template(json.dumps(doc))


def test_empty_waypoints_rejected():
    doc = minimal_doc()
    doc["agents"][0]["waypoints"] = []
    with pytest.raises(ScenarioError, match="waypoint"):
        parse_template(json.dumps(doc))


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.pop("map"), "missing key 'map'"),
    (lambda d: d["ego"].update(start=[0, 0, 0]), r"\$\.ego\.start"),
    (lambda d: d["agents"][0].update(color="red"), r"\$\.agents\[0\]\.color"),
    (lambda d: d["environment"].update(fog="thick"), r"\$\.environment\.fog"),
    (lambda d: d.update(duration_s=0), "duration_s"),
    (lambda d: d["ego"].update(destination=[0, 0, 0]), "destination"),
])
def test_schema_errors_name_the_path(mutate, path):
    doc = minimal_doc()
    mutate(doc)
    with pytest.raises(ScenarioError, match=path):
        parse_template(json.dumps(doc))


def test_environment_clamps_and_wraps():
    doc = minimal_doc()
    doc["environment"].update(rain=1.7, fog=-0.2, time_of_day=25.5)
    env = parse_template(json.dumps(doc)).environment
    assert env.rain == 1.0 and env.fog == 0.0
    assert env.time_of_day == pytest.approx(1.5)


def _count_specs_by_walk(doc, cfg):
    """Independent count: enumerate the schema families directly from the raw JSON."""
    n = 0
    for agent in doc["agents"]:
        if cfg.pos_noise_range_xz > 0:
            n += sum(2 for _ in agent["waypoints"])
        if cfg.color_noise_range_rgb > 0:
            n += len(agent["color"])
        if cfg.speed_max_noise > 0:
            n += 1
    if cfg.weather_noise_range > 0:
        n += 5
    if cfg.time_max_noise > 0:
        n += 1
    return n


def test_two_agents_three_waypoints_give_twelve_waypoint_specs():
    doc = minimal_doc()
    wps = [[1.0, 0.0, 2.0], [3.0, 0.0, 4.0], [5.0, 0.0, 6.0]]
    doc["agents"] = [
        {"kind": "pedestrian", "color": [0.1, 0.2, 0.3], "speed": 1.0, "waypoints": wps},
        {"kind": "vehicle", "color": [0.1, 0.2, 0.3], "speed": 5.0, "waypoints": wps},
    ]
    space = build_parameter_space(parse_template(json.dumps(doc)), NoiseConfig())
    waypoint_ids = [i for i in space.ids if ".waypoint" in i]
    assert len(waypoint_ids) == 12
    assert space.m == _count_specs_by_walk(doc, NoiseConfig())


def test_one_pedestrian_three_waypoints_dimension():
    doc = minimal_doc()
    doc["agents"][0]["waypoints"] = [[20.0, 0.0, -5.0], [20.0, 0.0, 0.0], [20.0, 0.0, 5.0]]
    space = build_parameter_space(parse_template(json.dumps(doc)), NoiseConfig())
    assert space.m == 16 == _count_specs_by_walk(doc, NoiseConfig())


def test_space_order(template):
    space = build_parameter_space(template, NoiseConfig())
    assert space.ids == [
        "agent0.waypoint0.x", "agent0.waypoint0.z", "agent0.waypoint1.x", "agent0.waypoint1.z",
        "agent0.waypoint2.x", "agent0.waypoint2.z", "agent0.color.r", "agent0.color.g",
        "agent0.color.b", "agent0.speed", "env.rain", "env.fog", "env.wetness",
        "env.cloudiness", "env.road_damage", "env.time_of_day",
    ]
    assert build_parameter_space(template, NoiseConfig()).ids == space.ids


def test_zero_ranges_give_empty_space(template):
    space = build_parameter_space(template, NoiseConfig(0, 0, 0, 0, 0))
    assert space.m == 0
    with pytest.raises(EmptySearchSpaceError, match="empty search space"):
        space.require_nonempty()


def test_zero_range_drops_only_that_family(template):
    space = build_parameter_space(template, NoiseConfig(color_noise_range_rgb=0))
    assert space.m == 13
    assert not any(".color." in i for i in space.ids)


def test_time_bounds_from_base_and_range():
    doc = minimal_doc()
    space = build_parameter_space(parse_template(json.dumps(doc)), NoiseConfig(time_max_noise=5))
    spec = space.specs[space.ids.index("env.time_of_day")]
    assert (spec.r_min, spec.r_max) == (7.0, 17.0)


def test_intensity_and_speed_bounds_clamped(template):
    space = build_parameter_space(template, NoiseConfig(weather_noise_range=0.5, speed_max_noise=5))
    by_id = dict(zip(space.ids, space.specs))
    assert by_id["env.rain"].r_min == 0.0   # 0.3 - 0.5 clamped
    assert by_id["agent0.speed"].r_min == 0.0
    for spec in space.specs:
        if spec.hard_min is not None:
            assert spec.r_min >= spec.hard_min
        if spec.hard_max is not None:
            assert spec.r_max <= spec.hard_max


def test_worked_time_example():
    spec = ParameterSpec("env.time_of_day", 11.0, 5.0, 17.0)
    assert scale_value(0.5, spec) == 14.0


def test_scale_endpoints_and_midpoint():
    space = ParameterSpace((ParameterSpec("a", 1.0, -3.0, 5.0),))
    assert scale([-1.0], space) == {"a": -3.0}
    assert scale([1.0], space) == {"a": 5.0}
    assert scale([0.0], space) == {"a": 1.0}


def test_scale_quarter_point():
    # (0.25 + 1) * (2 - (-2)) / 2 + (-2) = 1.25 * 2 - 2 = 0.5
    assert scale_value(0.25, ParameterSpec("p", 0.0, -2.0, 2.0)) == 0.5


@pytest.mark.parametrize("vec, msg", [([0.0], "length"), ([0.0, 1.5], "outside")])
def test_scale_rejects_bad_vectors(vec, msg):
    space = ParameterSpace((ParameterSpec("a", 0, -1, 1), ParameterSpec("b", 0, -1, 1)))
    with pytest.raises(ScenarioError, match=msg):
        scale(vec, space)


@given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e6),
       st.lists(st.floats(-1, 1), min_size=2, max_size=2, unique=True))
def test_scale_strictly_increasing(lo, width, ns):
    spec = ParameterSpec("p", lo + width / 2, lo, lo + width)
    a, b = sorted(ns)
    assert scale_value(a, spec) <= scale_value(b, spec)
    if b - a > 1e-9:
        assert scale_value(a, spec) < scale_value(b, spec)


def test_apply_identity_for_zero_noise(template, space):
    s = realize(template, space, [0.0] * space.m)
    assert s.template == template


def test_apply_endpoint_shift(template, space):
    v = [0.0] * space.m
    v[space.ids.index("agent0.waypoint0.x")] = 1.0
    s = realize(template, space, v)
    assert s.template.agents[0].waypoints[0][0] == template.agents[0].waypoints[0][0] + 2.0


def test_apply_wetness_clamped_at_one():
    doc = minimal_doc()
    doc["environment"]["wetness"] = 0.9
    t = parse_template(json.dumps(doc))
    space = build_parameter_space(t, NoiseConfig(weather_noise_range=0.3))
    v = [0.0] * space.m
    v[space.ids.index("env.wetness")] = 1.0
    assert realize(t, space, v).template.environment.wetness == 1.0


def test_apply_does_not_mutate_template(template, space):
    before = serialize_template(template)
    realize(template, space, np.random.default_rng(0).uniform(-1, 1, space.m))
    assert serialize_template(template) == before


def test_apply_unknown_id(template):
    for bad in ("agent7.speed", "agent0.waypoint9.x", "env.gravity", "nonsense"):
        with pytest.raises(ScenarioError, match="unknown parameter"):
            apply(template, {bad: 1.0})


def test_time_wraps_modulo_24():
    doc = minimal_doc()
    doc["environment"]["time_of_day"] = 22.0
    t = parse_template(json.dumps(doc))
    space = build_parameter_space(t, NoiseConfig(time_max_noise=5))
    v = [0.0] * space.m
    v[space.ids.index("env.time_of_day")] = 1.0
    assert realize(t, space, v).template.environment.time_of_day == pytest.approx(3.0)


def test_clamp_safety_over_random_vectors(template):
    space = build_parameter_space(template, NoiseConfig(weather_noise_range=1.0, speed_max_noise=3.0,
                                                         color_noise_range_rgb=1.0))
    rng = np.random.default_rng(7)
    for v in rng.uniform(-1, 1, size=(10_000, space.m)):
        values = scale(v, space)
        for key, x in values.items():
            if key.startswith("env.") and key != "env.time_of_day" or ".color." in key:
                assert 0.0 <= x <= 1.0
            if key.endswith(".speed"):
                assert x >= 0.0


def test_serialize_fixpoint(template, space):
    s = realize(template, space, np.random.default_rng(3).uniform(-1, 1, space.m))
    text = serialize_scenario(s)
    t2, v2 = parse_document(text)
    assert t2 == s.template
    assert v2 == s.noise_vector
    assert serialize_template(t2, v2) == text


def test_serialized_scenario_embeds_noise_vector(template, space):
    v = [0.125] * space.m
    obj = json.loads(serialize_scenario(realize(template, space, v)))
    assert obj["noise_vector"] == v


def test_bundled_file_round_trip():
    text = bundled_scenario_text()
    t = parse_template(text)
    assert json.loads(serialize_template(t)) == json.loads(text)
    assert parse_template(serialize_template(t)) == t


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_round_trip_property(v):
    t = parse_template(bundled_scenario_text())
    space = build_parameter_space(t, NoiseConfig())
    s = realize(t, space, v)
    t2, v2 = parse_document(serialize_scenario(s))
    assert t2 == s.template and v2 == tuple(v)
    assert all(math.isfinite(x) for x in v2)
