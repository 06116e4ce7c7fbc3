"""Bridge stub backed by the built-in simulator, with scripted misbehaviour.

--hang-above X   never answer requests whose first noise element exceeds X
--mode MODE      ok | error | garbage | mismatch | silent
"""
import argparse
import json
import sys
import time

from scenariogen.sim.bridge_server import handle_line

parser = argparse.ArgumentParser()
parser.add_argument("--hang-above", type=float, default=None)
parser.add_argument("--mode", default="ok")
parser.add_argument("--log", default=None, help="append one line per request received")
args = parser.parse_args()

for line in sys.stdin:
    if not line.strip():
        continue
    if args.log:
        with open(args.log, "a") as fh:
            fh.write("request\n")
    msg = json.loads(line)
    vec = msg["scenario"].get("noise_vector") or [0.0]
    if args.mode == "silent" or (args.hang_above is not None and vec[0] > args.hang_above):
        time.sleep(3600)
    if args.mode == "error":
        print(json.dumps({"status": "error", "message": "simulator crashed"}), flush=True)
    elif args.mode == "garbage":
        print("this is not json", flush=True)
    elif args.mode == "mismatch":
        reply = json.loads(handle_line(line))
        reply["trace"]["steps"][1]["agents"][0][0] = "someone_else"
        print(json.dumps(reply), flush=True)
    else:
        print(handle_line(line), flush=True)
