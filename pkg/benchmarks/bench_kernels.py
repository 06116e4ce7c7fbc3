"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeats N]

Both backends are imported directly, so the result does not depend on
SCENARIOGEN_PURE_PYTHON.  Outputs are checked for equality before timing.
"""
import argparse
import sys
import timeit

import numpy as np

from scenariogen._kernels import _pykernels
from scenariogen.experiment import load_template
from scenariogen.scenario import NoiseConfig, build_parameter_space, realize
from scenariogen.sim import builtin

try:
    from scenariogen._kernels import _ckernels
except ImportError:
    _ckernels = None


def simulate_args():
    template = load_template()
    space = build_parameter_space(template, NoiseConfig())
    t = realize(template, space, np.random.default_rng(0).uniform(-1, 1, space.m)).template
    cfg = builtin.SimConfig()
    wps, offsets, speeds, is_ped = builtin._pack(t)
    return (np.array(t.ego_start[:3], dtype=float), np.array(t.ego_destination, dtype=float),
            wps, offsets, speeds, is_ped, cfg.dt, cfg.cruise_speed, cfg.max_accel,
            builtin.effective_decel(t.environment, cfg), builtin.effective_range(t.environment, cfg),
            cfg.detection_fov_half_width, cfg.contact_distance,
            builtin.step_count(t.duration_s, cfg.dt))


def cases():
    sim = simulate_args()
    ego, agents, _, _ = _pykernels.simulate_kernel(*sim)
    failures = np.random.default_rng(1).uniform(-1, 1, (150, 16))
    return [
        ("simulate (1 scenario, 101 steps)", "simulate_kernel", sim),
        ("ego_agents_distance (1 trace)", "ego_agents_distance", (ego, agents)),
        ("pairwise_distances (150 x 16)", "pairwise_distances", (failures,)),
    ]


def best_time(fn, args, repeats):
    number = max(1, int(0.05 / max(1e-7, min(timeit.repeat(lambda: fn(*args), number=1, repeat=3)))))
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeats)) / number


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':36} {'python':>12} {'cython':>12} {'speedup':>8}")
    for label, name, call_args in cases():
        py_fn, c_fn = getattr(_pykernels, name), getattr(_ckernels, name)
        if not same(py_fn(*call_args), c_fn(*call_args)):
            print(f"{label}: backends disagree", file=sys.stderr)
            return 1
        tp = best_time(py_fn, call_args, args.repeats)
        tc = best_time(c_fn, call_args, args.repeats)
        print(f"{label:36} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
