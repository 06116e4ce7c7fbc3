"""Backend parity: compiled and pure-Python kernels must agree bit for bit."""
import os

import numpy as np
import pytest

from scenariogen import _kernels
from scenariogen._kernels import _pykernels
from scenariogen.scenario import NoiseConfig, build_parameter_space, realize
from scenariogen.sim import builtin

ckernels = pytest.importorskip("scenariogen._kernels._ckernels")


def _kernel_args(scenario, cfg=builtin.SimConfig()):
    t = scenario.template
    wps, offsets, speeds, is_ped = builtin._pack(t)
    return (np.array(t.ego_start[:3], dtype=float), np.array(t.ego_destination, dtype=float),
            wps, offsets, speeds, is_ped, cfg.dt, cfg.cruise_speed, cfg.max_accel,
            builtin.effective_decel(t.environment, cfg), builtin.effective_range(t.environment, cfg),
            cfg.detection_fov_half_width, cfg.contact_distance, 100)


@pytest.mark.skipif(os.environ.get("SCENARIOGEN_PURE_PYTHON") == "1", reason="fallback forced")
def test_compiled_backend_selected():
    assert _kernels.BACKEND == "cython"


def test_simulate_parity(template):
    space = build_parameter_space(template, NoiseConfig(pos_noise_range_xz=6, speed_max_noise=1.4,
                                                         weather_noise_range=0.7))
    rng = np.random.default_rng(123)
    collided = 0
    for v in rng.uniform(-1, 1, (300, space.m)):
        args = _kernel_args(realize(template, space, v))
        c = ckernels.simulate_kernel(*args)
        p = _pykernels.simulate_kernel(*args)
        assert np.array_equal(c[0], p[0]) and np.array_equal(c[1], p[1])
        assert list(c[2]) == list(p[2]) and list(c[3]) == list(p[3])
        collided += bool(c[2])
    assert collided > 0  # the parity check covered the collision branch


def test_distance_kernels_parity():
    rng = np.random.default_rng(9)
    ego = rng.normal(size=(50, 3))
    agents = rng.normal(size=(50, 4, 3))
    assert ckernels.ego_agents_distance(ego, agents) == _pykernels.ego_agents_distance(ego, agents)
    x = rng.uniform(-1, 1, (25, 16))
    assert np.array_equal(ckernels.pairwise_distances(x), _pykernels.pairwise_distances(x))
