# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirror ``_pykernels.py`` expression for expression."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def simulate_kernel(double[::1] ego_start, double[::1] ego_dest, double[:, ::1] waypoints,
                    long long[::1] wp_offsets, double[::1] speeds, unsigned char[::1] is_ped,
                    double dt, double cruise_speed, double max_accel, double brake_decel,
                    double detect_range, double fov_half_width, double contact_dist,
                    Py_ssize_t n_steps):
    cdef Py_ssize_t n_agents = speeds.shape[0]
    cdef double ex = ego_start[0], ey = ego_start[1], ez = ego_start[2]
    cdef double dx_ = ego_dest[0], dz_ = ego_dest[2]
    cdef double ux = dx_ - ex
    cdef double uz = dz_ - ez
    cdef double norm = sqrt(ux * ux + uz * uz)
    ux = ux / norm
    uz = uz / norm

    cdef double[::1] ax = np.zeros(n_agents)
    cdef double[::1] ay = np.zeros(n_agents)
    cdef double[::1] az = np.zeros(n_agents)
    cdef long long[::1] target = np.zeros(n_agents, dtype=np.int64)
    cdef Py_ssize_t a, s, k, t, end
    for a in range(n_agents):
        k = wp_offsets[a]
        ax[a] = waypoints[k, 0]
        ay[a] = waypoints[k, 1]
        az[a] = waypoints[k, 2]
        target[a] = k + 1

    ego_arr = np.empty((n_steps + 1, 3))
    agent_arr = np.empty((n_steps + 1, n_agents, 3))
    cdef double[:, ::1] ego_out = ego_arr
    cdef double[:, :, ::1] agent_out = agent_arr
    coll_steps = []
    coll_agents = []

    cdef double v = cruise_speed
    cdef bint halted = False, arrived = False, brake
    cdef double rx, ry, rz, fwd, lat, acc, remaining, step, d

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
                rx = waypoints[t, 0] - ax[a]
                ry = waypoints[t, 1] - ay[a]
                rz = waypoints[t, 2] - az[a]
                d = sqrt(rx * rx + ry * ry + rz * rz)
                if d <= step:
                    ax[a] = waypoints[t, 0]
                    ay[a] = waypoints[t, 1]
                    az[a] = waypoints[t, 2]
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

    return ego_arr, agent_arr, coll_steps, coll_agents


def ego_agents_distance(const double[:, ::1] ego_pos, const double[:, :, ::1] agent_pos):
    cdef Py_ssize_t n_steps = agent_pos.shape[0], n_agents = agent_pos.shape[1]
    cdef Py_ssize_t a, s
    cdef double total = 0.0, dx, dy, dz
    for a in range(n_agents):
        for s in range(n_steps):
            dx = ego_pos[s, 0] - agent_pos[s, a, 0]
            dy = ego_pos[s, 1] - agent_pos[s, a, 1]
            dz = ego_pos[s, 2] - agent_pos[s, a, 2]
            total += sqrt(dx * dx + dy * dy + dz * dz)
    return total


def pairwise_distances(const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, d
    out_arr = np.zeros((n, n))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(m):
                d = x[i, k] - x[j, k]
                acc += d * d
            d = sqrt(acc)
            out[i, j] = d
            out[j, i] = d
    return out_arr
