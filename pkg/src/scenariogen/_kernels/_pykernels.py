"""Pure-Python kernels.

Every arithmetic expression here is mirrored operation-for-operation in
``_ckernels.pyx`` so both backends return bit-identical doubles.  Keep them
in sync; ``tests/test_kernels.py`` checks parity.
"""
from math import sqrt

import numpy as np


def simulate_kernel(ego_start, ego_dest, waypoints, wp_offsets, speeds, is_ped,
                    dt, cruise_speed, max_accel, brake_decel, detect_range,
                    fov_half_width, contact_dist, n_steps):
    """Step the world ``n_steps`` times.

    Returns ``(ego_pos, agent_pos, coll_steps, coll_agents)``; positions hold
    ``n_steps + 1`` snapshots, the first being the initial state.  Collision
    steps are 1-based snapshot indices.
    """
    n_agents = len(speeds)
    waypoints = [[float(c) for c in w] for w in np.asarray(waypoints, dtype=float).tolist()]
    wp_offsets = [int(k) for k in wp_offsets]
    speeds = [float(x) for x in speeds]
    is_ped = [bool(x) for x in is_ped]
    dt = float(dt)
    ex, ey, ez = float(ego_start[0]), float(ego_start[1]), float(ego_start[2])
    dx_, dz_ = float(ego_dest[0]), float(ego_dest[2])
    ux = dx_ - ex
    uz = dz_ - ez
    norm = sqrt(ux * ux + uz * uz)
    ux = ux / norm
    uz = uz / norm

    ax = [0.0] * n_agents
    ay = [0.0] * n_agents
    az = [0.0] * n_agents
    target = [0] * n_agents
    for a in range(n_agents):
        k = wp_offsets[a]
        ax[a] = waypoints[k][0]
        ay[a] = waypoints[k][1]
        az[a] = waypoints[k][2]
        target[a] = k + 1

    ego_out = np.empty((n_steps + 1, 3))
    agent_out = np.empty((n_steps + 1, n_agents, 3))
    coll_steps = []
    coll_agents = []

    v = float(cruise_speed)
    halted = False
    arrived = False

    for s in range(n_steps + 1):
        if s > 0:
            if not halted and not arrived:
                brake = False
                for a in range(n_agents):
                    if not is_ped[a]:
                        continue
                    rx = ax[a] - ex
                    rz = az[a] - ez
                    fwd = rx * ux + rz * uz
                    lat = rx * uz - rz * ux
                    if lat < 0.0:
                        lat = -lat
                    if fwd > 0.0 and fwd <= detect_range and lat <= fov_half_width:
                        brake = True
                        break
                if brake:
                    acc = -brake_decel
                elif v < cruise_speed:
                    acc = max_accel
                else:
                    acc = 0.0
                v = v + acc * dt
                if v < 0.0:
                    v = 0.0
                if v > cruise_speed:
                    v = cruise_speed
                rx = dx_ - ex
                rz = dz_ - ez
                remaining = sqrt(rx * rx + rz * rz)
                step = v * dt
                if step >= remaining:
                    ex = dx_
                    ez = dz_
                    v = 0.0
                    arrived = True
                else:
                    ex = ex + ux * step
                    ez = ez + uz * step

            for a in range(n_agents):
                end = wp_offsets[a + 1]
                t = target[a]
                if t >= end:
                    continue
                step = speeds[a] * dt
                rx = waypoints[t][0] - ax[a]
                ry = waypoints[t][1] - ay[a]
                rz = waypoints[t][2] - az[a]
                d = sqrt(rx * rx + ry * ry + rz * rz)
                if d <= step:
                    ax[a] = waypoints[t][0]
                    ay[a] = waypoints[t][1]
                    az[a] = waypoints[t][2]
                    target[a] = t + 1
                else:
                    ax[a] = ax[a] + rx / d * step
                    ay[a] = ay[a] + ry / d * step
                    az[a] = az[a] + rz / d * step

        for a in range(n_agents):
            if not is_ped[a]:
                continue
            rx = ax[a] - ex
            rz = az[a] - ez
            if sqrt(rx * rx + rz * rz) < contact_dist:
                coll_steps.append(s + 1)
                coll_agents.append(a)
                halted = True
                v = 0.0

        ego_out[s, 0] = ex
        ego_out[s, 1] = ey
        ego_out[s, 2] = ez
        for a in range(n_agents):
            agent_out[s, a, 0] = ax[a]
            agent_out[s, a, 1] = ay[a]
            agent_out[s, a, 2] = az[a]

    return ego_out, agent_out, coll_steps, coll_agents


def ego_agents_distance(ego_pos, agent_pos):
    """Sum of ego-agent distances, agents outer, steps inner."""
    n_steps, n_agents = agent_pos.shape[0], agent_pos.shape[1]
    ego = ego_pos.tolist()
    agents = agent_pos.tolist()
    total = 0.0
    for a in range(n_agents):
        for s in range(n_steps):
            e = ego[s]
            p = agents[s][a]
            dx = e[0] - p[0]
            dy = e[1] - p[1]
            dz = e[2] - p[2]
            total += sqrt(dx * dx + dy * dy + dz * dz)
    return total


def pairwise_distances(x):
    """Symmetric Euclidean distance matrix between the rows of ``x``."""
    n, m = x.shape
    rows = x.tolist()
    out = np.zeros((n, n))
    for i in range(n):
        ri = rows[i]
        for j in range(i + 1, n):
            rj = rows[j]
            acc = 0.0
            for k in range(m):
                d = ri[k] - rj[k]
                acc += d * d
            d = sqrt(acc)
            out[i, j] = d
            out[j, i] = d
    return out
