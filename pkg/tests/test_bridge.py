import json
import sys
import socketserver
import threading

import numpy as np
import pytest

from conftest import stub_command
from scenariogen.objective import score_trace
from scenariogen.scenario import realize
from scenariogen.search import run_random
from scenariogen.sim import bridge_server
from scenariogen.sim.bridge import (
    BridgeConfig, BridgeEvaluator, BridgeProtocolError, BridgeTimeout, RemoteSimulationError,
    decode_response, encode_request, run_remote, trace_from_wire, trace_to_wire,
)
from scenariogen.sim.builtin import simulate


@pytest.fixture
def scenario(template, space):
    return realize(template, space, np.random.default_rng(0).uniform(-1, 1, space.m))


def test_canned_stub_trace(scenario):
    trace = run_remote(scenario, BridgeConfig(stub_command("canned_stub.py"), request_timeout_s=10))
    assert list(trace.step_indices) == [1, 2]
    assert trace.agent_ids == ("ped0",)
    assert trace.ego_positions.tolist() == [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    assert trace.agent_positions[:, 0].tolist() == [[10.0, 0.0, -3.0], [10.0, 0.0, -2.5]]
    assert trace.collisions == ()


def test_scripted_stub_matches_builtin(template, space):
    rng = np.random.default_rng(1)
    cfg = BridgeConfig(stub_command("scripted_stub.py"), request_timeout_s=20)
    with BridgeEvaluator(template, space, cfg) as ev:
        for v in rng.uniform(-1, 1, (5, space.m)):
            remote, _ = ev.evaluate(v)
            local = score_trace(simulate(realize(template, space, v)))
            assert remote == local


def test_request_carries_scenario_and_vector(scenario):
    msg = json.loads(encode_request(scenario, {"dt": 0.05}))
    assert msg["cmd"] == "run"
    assert msg["scenario"]["noise_vector"] == list(scenario.noise_vector)
    assert msg["sim_config"] == {"dt": 0.05}


def test_wire_round_trip(scenario):
    trace = simulate(scenario)
    back = trace_from_wire(json.loads(json.dumps(trace_to_wire(trace))))
    assert np.array_equal(back.ego_positions, trace.ego_positions)
    assert np.array_equal(back.agent_positions, trace.agent_positions)
    assert [(c.step_index, c.agent_id) for c in back.collisions] == \
        [(c.step_index, c.agent_id) for c in trace.collisions]


def test_timeout_retries_once_then_raises(scenario, tmp_path):
    log = tmp_path / "requests.log"
    cfg = BridgeConfig(stub_command("scripted_stub.py", "--mode", "silent", "--log", str(log)),
                       request_timeout_s=1.5, max_retries=1)
    with pytest.raises(BridgeTimeout):
        run_remote(scenario, cfg)
    assert log.read_text().count("request") == 2


@pytest.mark.parametrize("mode, error", [
    ("error", RemoteSimulationError),
    ("garbage", BridgeProtocolError),
    ("mismatch", BridgeProtocolError),
])
def test_misbehaving_peer(scenario, mode, error):
    cfg = BridgeConfig(stub_command("scripted_stub.py", "--mode", mode), request_timeout_s=20)
    with pytest.raises(error):
        run_remote(scenario, cfg)


def test_process_exit_is_protocol_error(scenario):
    cfg = BridgeConfig([sys.executable, "-c", "pass"], request_timeout_s=10)
    with pytest.raises(BridgeProtocolError):
        run_remote(scenario, cfg)


@pytest.mark.parametrize("line", [
    "[]",
    json.dumps({"status": "ok"}),
    json.dumps({"status": "ok", "trace": {"steps": [{"i": 1, "ego": [0, 0], "agents": []}]}}),
    json.dumps({"status": "ok", "trace": {"steps": [{"i": 1, "ego": [0, 0, 0], "agents": []}],
                                          "collisions": [{"i": 1, "agent": "ghost"}]}}),
])
def test_decode_rejects_malformed(line):
    with pytest.raises(BridgeProtocolError):
        decode_response(line)


def test_server_reports_bad_requests():
    assert json.loads(bridge_server.handle_line('{"cmd": "jump"}'))["status"] == "error"
    assert json.loads(bridge_server.handle_line('{"cmd": "run", "scenario": {}}'))["status"] == "error"


@pytest.fixture
def tcp_endpoint():
    server = socketserver.ThreadingTCPServer(("127.0.0.1", 0), bridge_server._Handler)
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"tcp://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def test_tcp_transport(template, space, tcp_endpoint):
    cfg = BridgeConfig(tcp_endpoint, request_timeout_s=10)
    with BridgeEvaluator(template, space, cfg) as ev:
        res = run_random(space, ev, budget=5, seed=3)
    local = [score_trace(simulate(realize(template, space, r.genotype))) for r in res.evaluations]
    assert [r.score for r in res.evaluations] == local


def test_hung_requests_score_worst_without_aborting(template, space):
    cfg = BridgeConfig(stub_command("scripted_stub.py", "--hang-above", "0.6"),
                       request_timeout_s=1.0, max_retries=0)
    with BridgeEvaluator(template, space, cfg) as ev:
        res = run_random(space, ev, budget=8, seed=0)
    assert len(res.evaluations) == 8
    hung = [r for r in res.evaluations if r.genotype[0] > 0.6]
    assert hung and all(r.error and r.score.e_value == float("inf") for r in hung)
    assert all(r.error is None for r in res.evaluations if r.genotype[0] <= 0.6)
