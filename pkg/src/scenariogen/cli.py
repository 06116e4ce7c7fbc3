"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 simulator backend failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import compare_runs, emit_reports, summarize
from .evaluator import EvaluationError
from .experiment import bundled_scenario_text, destination_from_forward_right, pair_seeds, run_pair
from .objective import score_trace
from .scenario import (
    NoiseConfig, ScenarioError, apply, build_parameter_space, parse_document, realize,
)
from .search import GAConfig, SearchResult, run_ga, run_random
from .sim.bridge import BridgeConfig, BridgeEvaluator, run_remote
from .sim.builtin import BuiltinEvaluator, SimConfig, simulate

log = logging.getLogger("scenariogen")

ACTIONS = ("genetic_algorithm", "random", "compare", "replay", "differential_evolution", "powell")
UNIMPLEMENTED = ("differential_evolution", "powell")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="scenariogen",
        description="Search for pedestrian-collision scenarios by perturbing a base scenario.",
        epilog=("A zero noise vector maps every parameter to the midpoint of its range, which is "
                "the base value unless a physical clamp (intensities to [0, 1], speed >= 0) "
                "made the range asymmetric."),
    )
    p.add_argument("--input", help="base scenario JSON (default: bundled pedestrian crossing)")
    p.add_argument("--action", choices=ACTIONS, default="genetic_algorithm")
    p.add_argument("--vector", help="noise vector for replay, e.g. '[0.1, -0.5, ...]'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=float, help="scenario duration in seconds")
    p.add_argument("--des-forward-right", nargs=2, type=float, metavar=("FORWARD", "RIGHT"),
                   help="destination relative to the ego start pose, meters")
    defaults = NoiseConfig()
    p.add_argument("--pos-noise-range-xz", type=float, default=defaults.pos_noise_range_xz)
    p.add_argument("--color-noise-range-rgb", type=float, default=defaults.color_noise_range_rgb)
    p.add_argument("--weather-noise-range", type=float, default=defaults.weather_noise_range)
    p.add_argument("--time-max-noise", type=float, default=defaults.time_max_noise)
    p.add_argument("--speed-max-noise", type=float, default=defaults.speed_max_noise)
    p.add_argument("--backend", default="builtin",
                   help="'builtin', 'tcp://HOST:PORT', or a command line speaking the bridge protocol")
    p.add_argument("--request-timeout", type=float, default=60.0, help="bridge timeout, seconds")
    p.add_argument("--out-dir", default="runs/latest")
    ga = GAConfig()
    p.add_argument("--population", type=int, default=ga.population_size)
    p.add_argument("--generations", type=int, default=ga.generations)
    p.add_argument("--mutation-rate", type=float, default=ga.mutation_rate)
    p.add_argument("--eta", type=float, default=ga.eta)
    p.add_argument("--tournament-size", type=int, default=ga.tournament_size)
    p.add_argument("--budget", type=int, default=ga.eval_budget)
    p.add_argument("--repeats", type=int, default=1, help="paired repetitions for compare")
    p.add_argument("--workers", type=int, default=1, help="concurrent evaluations (builtin only)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_vector(text: str) -> list[float]:
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        try:
            value = [float(x) for x in text.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"cannot parse --vector {text!r}") from None
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                          for v in value):
        raise UsageError("--vector must be a list of numbers")
    return [float(v) for v in value]


def _make_evaluator(args, template, space):
    if args.backend == "builtin":
        return BuiltinEvaluator(template, space, SimConfig(), seed=args.seed)
    return BridgeEvaluator(template, space,
                           BridgeConfig(args.backend, request_timeout_s=args.request_timeout))


def _report(result: SearchResult, out_dir: Path) -> None:
    summary = summarize(result)
    emit_reports(summary, result.evaluations, out_dir)
    log.info("%s: %d evaluations, %d failures, best E %s (%.2f s) -> %s",
             result.strategy_name, summary["evaluations"], summary["failures"],
             summary["best_e_value"], result.wall_time_s, out_dir)
    print(json.dumps({k: summary[k] for k in ("strategy", "evaluations", "failures",
                                              "best_e_value", "diversity_min", "diversity_max")}))


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


def _all_failed(*results: SearchResult) -> bool:
    return all(r.evaluations and all(e.error for e in r.evaluations) for r in results)


def _replay(args, template, doc_vector) -> int:
    cfg = NoiseConfig(args.pos_noise_range_xz, args.color_noise_range_rgb,
                      args.weather_noise_range, args.time_max_noise, args.speed_max_noise)
    space = build_parameter_space(template, cfg)
    if args.vector is not None:
        vector = _parse_vector(args.vector)
        if len(vector) != space.m:
            raise UsageError(f"--vector has {len(vector)} elements, the scenario needs {space.m}")
        scenario = realize(template, space, vector)
    elif doc_vector is not None:
        # the document is already a realized scenario; run it unchanged
        scenario = apply(template, {}, doc_vector)
    else:
        scenario = realize(template, space, [0.0] * space.m)
    if args.backend == "builtin":
        trace = simulate(scenario, SimConfig(), args.seed)
    else:
        trace = run_remote(scenario, BridgeConfig(args.backend, request_timeout_s=args.request_timeout))
    score = score_trace(trace)
    print(json.dumps({
        "ego_agents_distance": score.ego_agents_distance,
        "journey_distance": score.journey_distance,
        "acc": score.acc,
        "e_value": _finite(score.e_value),
        "collisions": [{"i": ev.step_index, "agent": ev.agent_id} for ev in trace.collisions],
        "noise_vector": list(scenario.noise_vector),
    }))
    return 0


def run(args) -> int:
    if args.action in UNIMPLEMENTED:
        raise UsageError(f"strategy {args.action!r} is not available in this build")
    if args.vector is not None and args.action != "replay":
        raise UsageError("--vector requires --action replay")
    if args.input is not None:
        path = Path(args.input)
        if not path.is_file():
            raise UsageError(f"input file not found: {path}")
        template, doc_vector = parse_document(path.read_text(encoding="utf-8"))
    else:
        template, doc_vector = parse_document(bundled_scenario_text())
    if args.steps is not None:
        template = replace(template, duration_s=args.steps)
    if args.des_forward_right is not None:
        template = destination_from_forward_right(template, *args.des_forward_right)

    if args.action == "replay":
        return _replay(args, template, doc_vector)

    noise = NoiseConfig(args.pos_noise_range_xz, args.color_noise_range_rgb,
                        args.weather_noise_range, args.time_max_noise, args.speed_max_noise)
    space = build_parameter_space(template, noise)
    space.require_nonempty()
    ga_cfg = GAConfig(args.population, args.generations, args.mutation_rate, args.eta,
                      args.tournament_size, args.budget, args.seed)
    out_dir = Path(args.out_dir)
    evaluator = _make_evaluator(args, template, space)
    try:
        if args.action == "genetic_algorithm":
            result = run_ga(space, evaluator, ga_cfg, args.workers)
            _report(result, out_dir)
            return 2 if _all_failed(result) else 0
        if args.action == "random":
            result = run_random(space, evaluator, args.budget, args.seed, args.workers)
            _report(result, out_dir)
            return 2 if _all_failed(result) else 0

        pairs = pair_seeds(args.seed, args.repeats)
        rows = []
        for k, (ga_seed, rnd_seed) in enumerate(pairs):
            outcome = run_pair(space, evaluator, ga_cfg, ga_seed, rnd_seed, args.workers)
            target = out_dir if args.repeats == 1 else out_dir / f"pair{k}"
            summary = compare_runs(outcome.ga, outcome.random)
            emit_reports(summary, outcome.ga.evaluations + outcome.random.evaluations, target)
            ga_div, rnd_div = outcome.diversity_means()
            row = {"ga_seed": ga_seed, "random_seed": rnd_seed,
                   "ga_failures": outcome.ga_failures, "random_failures": outcome.random_failures,
                   "ga_diversity_mean": _finite(ga_div), "random_diversity_mean": _finite(rnd_div)}
            rows.append(row)
            print(json.dumps(row))
            if _all_failed(outcome.ga, outcome.random):
                return 2
        if args.repeats > 1:
            pooled = {"pairs": rows,
                      "pooled_ga_failures": sum(r["ga_failures"] for r in rows),
                      "pooled_random_failures": sum(r["random_failures"] for r in rows)}
            (out_dir / "pairs.json").write_text(json.dumps(pooled, indent=2) + "\n", encoding="utf-8")
        return 0
    finally:
        close = getattr(evaluator, "close", None)
        if close:
            close()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return run(args)
    except (UsageError, ScenarioError) as exc:
        print(f"scenariogen: error: {exc}", file=sys.stderr)
        return 1
    except (EvaluationError, OSError) as exc:
        print(f"scenariogen: backend failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
