"""Client for external simulators speaking newline-delimited JSON.

One request line per evaluation attempt::

    {"cmd": "run", "scenario": {...}, "sim_config": {...}}

answered by one response line::

    {"status": "ok", "trace": {"steps": [{"i": 1, "ego": [x, y, z],
                                          "agents": [["ped0", x, y, z], ...]}, ...],
                               "collisions": [{"i": 3, "agent": "ped0"}]}}
    {"status": "error", "message": "..."}

The endpoint is either a command line (spawned once, spoken to over stdio) or
``tcp://host:port``.
"""
from __future__ import annotations

import json
import logging
import queue
import shlex
import socket
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..evaluator import EvaluationError, ScenarioEvaluator
from ..objective import CollisionEvent, SimulationTrace, Snapshot, TraceError
from ..scenario import ConcreteScenario, template_to_obj

log = logging.getLogger(__name__)


class BridgeTimeout(EvaluationError):
    pass


class BridgeProtocolError(EvaluationError):
    pass


class RemoteSimulationError(EvaluationError):
    pass


@dataclass(frozen=True)
class BridgeConfig:
    endpoint: str | Sequence[str]
    request_timeout_s: float = 60.0
    max_retries: int = 1
    sim_config: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.request_timeout_s > 0:
            raise ValueError("request_timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def is_tcp(self) -> bool:
        return isinstance(self.endpoint, str) and self.endpoint.startswith("tcp://")


class _SubprocessTransport:
    def __init__(self, argv: Sequence[str]):
        self.argv = list(argv)
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()

    def _start(self) -> None:
        self._proc = subprocess.Popen(
            self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1,
        )
        lines: queue.Queue = queue.Queue()
        self._lines = lines
        proc = self._proc

        def pump() -> None:
            for line in proc.stdout:
                lines.put(line)
            lines.put(None)

        threading.Thread(target=pump, daemon=True).start()

    def request(self, line: str, timeout: float) -> str:
        if self._proc is None or self._proc.poll() is not None:
            self._start()
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.close()
            raise BridgeProtocolError(f"simulator process not accepting input: {exc}") from None
        try:
            reply = self._lines.get(timeout=timeout)
        except queue.Empty:
            # a late reply would be mistaken for the next one; start afresh
            self.close()
            raise BridgeTimeout(f"no reply within {timeout} s") from None
        if reply is None:
            self.close()
            raise BridgeProtocolError("simulator process closed its output")
        return reply

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.poll() is None:
                self._proc.kill()
            self._proc.wait()
            for stream in (self._proc.stdin, self._proc.stdout):
                try:
                    stream.close()
                except OSError:
                    pass
            self._proc = None


class _TcpTransport:
    def __init__(self, address: str):
        host, _, port = address[len("tcp://"):].rpartition(":")
        self.address = (host or "127.0.0.1", int(port))
        self._sock: socket.socket | None = None
        self._file = None

    def request(self, line: str, timeout: float) -> str:
        try:
            if self._sock is None:
                self._sock = socket.create_connection(self.address, timeout=timeout)
                self._file = self._sock.makefile("rwb")
            self._sock.settimeout(timeout)
            self._file.write((line + "\n").encode("utf-8"))
            self._file.flush()
            reply = self._file.readline()
        except socket.timeout:
            self.close()
            raise BridgeTimeout(f"no reply within {timeout} s") from None
        except OSError as exc:
            self.close()
            raise BridgeProtocolError(f"connection to {self.address} failed: {exc}") from None
        if not reply:
            self.close()
            raise BridgeProtocolError("simulator closed the connection")
        return reply.decode("utf-8")

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._file.close()
                self._sock.close()
            except OSError:
                pass
            self._sock = None
            self._file = None


def make_transport(cfg: BridgeConfig):
    if cfg.is_tcp:
        return _TcpTransport(cfg.endpoint)
    argv = shlex.split(cfg.endpoint) if isinstance(cfg.endpoint, str) else list(cfg.endpoint)
    return _SubprocessTransport(argv)


def encode_request(s: ConcreteScenario, sim_config: Mapping[str, Any] | None = None) -> str:
    scenario = template_to_obj(s.template)
    scenario["noise_vector"] = list(s.noise_vector)
    return json.dumps({"cmd": "run", "scenario": scenario, "sim_config": dict(sim_config or {})})


def _triple(obj: Any, where: str) -> tuple[float, float, float]:
    if (not isinstance(obj, list) or len(obj) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in obj)):
        raise BridgeProtocolError(f"{where}: expected [x, y, z]")
    return (float(obj[0]), float(obj[1]), float(obj[2]))


def trace_from_wire(obj: Any) -> SimulationTrace:
    """Build and validate a trace from its wire form."""
    try:
        steps = obj["steps"]
        snapshots = []
        for k, step in enumerate(steps):
            agents = []
            for entry in step["agents"]:
                if not isinstance(entry, list) or len(entry) != 4 or not isinstance(entry[0], str):
                    raise BridgeProtocolError(f"steps[{k}].agents: expected [id, x, y, z]")
                agents.append((entry[0], _triple(entry[1:], f"steps[{k}].agents")))
            snapshots.append(Snapshot(int(step["i"]), _triple(step["ego"], f"steps[{k}].ego"),
                                      tuple(agents)))
        by_step = {s.step_index: s.ego_pos for s in snapshots}
        collisions = [
            CollisionEvent(int(c["i"]), str(c["agent"]), by_step.get(int(c["i"])))
            for c in obj.get("collisions", [])
        ]
        return SimulationTrace.from_snapshots(snapshots, collisions)
    except BridgeProtocolError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise BridgeProtocolError(f"invalid trace: {exc}") from None


def trace_to_wire(t: SimulationTrace) -> dict:
    return {
        "steps": [
            {"i": int(i), "ego": t.ego_positions[k].tolist(),
             "agents": [[aid, *t.agent_positions[k, a].tolist()] for a, aid in enumerate(t.agent_ids)]}
            for k, i in enumerate(t.step_indices)
        ],
        "collisions": [{"i": ev.step_index, "agent": ev.agent_id} for ev in t.collisions],
    }


def decode_response(line: str) -> SimulationTrace:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError:
        log.error("malformed bridge response: %r", line)
        raise BridgeProtocolError(f"malformed response: {line[:200]!r}") from None
    if not isinstance(msg, dict):
        log.error("malformed bridge response: %r", line)
        raise BridgeProtocolError(f"malformed response: {line[:200]!r}")
    status = msg.get("status")
    if status == "error":
        raise RemoteSimulationError(str(msg.get("message", "remote simulator error")))
    if status != "ok" or "trace" not in msg:
        log.error("malformed bridge response: %r", line)
        raise BridgeProtocolError(f"unexpected response: {line[:200]!r}")
    try:
        return trace_from_wire(msg["trace"])
    except (BridgeProtocolError, TraceError) as exc:
        log.error("invalid trace in bridge response: %r", line)
        raise BridgeProtocolError(str(exc)) from None


def run_remote(s: ConcreteScenario, cfg: BridgeConfig, transport=None) -> SimulationTrace:
    """Send one scenario and return the validated trace.

    Timeouts are retried up to ``cfg.max_retries`` times, one request line per attempt.
    """
    owned = transport is None
    transport = transport or make_transport(cfg)
    line = encode_request(s, cfg.sim_config)
    try:
        for attempt in range(cfg.max_retries + 1):
            try:
                reply = transport.request(line, cfg.request_timeout_s)
            except BridgeTimeout:
                log.warning("bridge timeout (attempt %d of %d)", attempt + 1, cfg.max_retries + 1)
                if attempt == cfg.max_retries:
                    raise
                continue
            return decode_response(reply)
        raise AssertionError("unreachable")
    finally:
        if owned:
            transport.close()


class BridgeEvaluator(ScenarioEvaluator):
    """Evaluator backed by a single external simulator; one request in flight."""

    supports_concurrent_evaluation = False

    def __init__(self, template, space, cfg: BridgeConfig, accident_weight: float | None = None):
        if accident_weight is None:
            super().__init__(template, space)
        else:
            super().__init__(template, space, accident_weight)
        self.cfg = cfg
        self._transport = make_transport(cfg)

    def run(self, scenario: ConcreteScenario) -> SimulationTrace:
        return run_remote(scenario, self.cfg, self._transport)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()
