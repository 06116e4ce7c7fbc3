import json
import sys
from pathlib import Path

import pytest

from scenariogen.experiment import bundled_scenario_text
from scenariogen.scenario import NoiseConfig, build_parameter_space, parse_template
from scenariogen.sim.builtin import BuiltinEvaluator

STUBS = Path(__file__).parent / "stubs"

_criterion_lines: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed at session end."""
    def record(number: int, passed: bool, detail: str) -> None:
        _criterion_lines.append(f"[criterion {number}] {'PASS' if passed else 'FAIL'}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def template():
    return parse_template(bundled_scenario_text())


@pytest.fixture(scope="session")
def space(template):
    return build_parameter_space(template, NoiseConfig())


@pytest.fixture(scope="session")
def evaluator(template, space):
    return BuiltinEvaluator(template, space)


def stub_command(name: str, *args: str) -> list[str]:
    return [sys.executable, str(STUBS / name), *args]


def minimal_doc(**overrides) -> dict:
    doc = {
        "map": "test",
        "ego": {"start": [0.0, 0.0, 0.0, 0.0], "destination": [50.0, 0.0, 0.0]},
        "agents": [{"kind": "pedestrian", "color": [0.5, 0.5, 0.5], "speed": 1.0,
                    "waypoints": [[20.0, 0.0, -5.0], [20.0, 0.0, 5.0]]}],
        "environment": {"time_of_day": 12.0, "rain": 0.0, "fog": 0.0, "wetness": 0.0,
                        "cloudiness": 0.0, "road_damage": 0.0},
        "duration_s": 10.0,
    }
    doc.update(overrides)
    return doc


def minimal_json(**overrides) -> str:
    return json.dumps(minimal_doc(**overrides))
