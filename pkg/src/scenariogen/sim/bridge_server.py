"""Bridge peer that answers ``run`` requests with the built-in simulator.

Serves stdio by default (``python -m scenariogen.sim.bridge_server``) or TCP
with ``--tcp HOST:PORT``.  Useful as a reference for writing a bridge to a
real simulator and for exercising the client end to end.
"""
from __future__ import annotations

import argparse
import json
import socketserver
import sys
from dataclasses import fields

from ..scenario import ScenarioError, template_from_obj
from .bridge import trace_to_wire
from .builtin import SimConfig, simulate


def handle_line(line: str) -> str:
    try:
        msg = json.loads(line)
        if msg.get("cmd") != "run":
            raise ValueError(f"unknown cmd {msg.get('cmd')!r}")
        known = {f.name for f in fields(SimConfig)}
        cfg = SimConfig(**{k: v for k, v in (msg.get("sim_config") or {}).items() if k in known})
        trace = simulate(template_from_obj(msg["scenario"]), cfg)
        return json.dumps({"status": "ok", "trace": trace_to_wire(trace)})
    except (ValueError, KeyError, TypeError, AttributeError, ScenarioError) as exc:
        return json.dumps({"status": "error", "message": str(exc)})


def serve_stdio(inp=sys.stdin, out=sys.stdout) -> None:
    for line in inp:
        if line.strip():
            out.write(handle_line(line) + "\n")
            out.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        for raw in self.rfile:
            line = raw.decode("utf-8")
            if line.strip():
                self.wfile.write((handle_line(line) + "\n").encode("utf-8"))
                self.wfile.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tcp", metavar="HOST:PORT", help="listen on TCP instead of stdio")
    args = parser.parse_args(argv)
    if args.tcp:
        host, _, port = args.tcp.rpartition(":")
        with socketserver.ThreadingTCPServer((host or "127.0.0.1", int(port)), _Handler) as server:
            server.serve_forever()
    else:
        serve_stdio()
    return 0


if __name__ == "__main__":
    sys.exit(main())
