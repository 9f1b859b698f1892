"""Compiled inner loops.  Pure functions of their array arguments."""

import math

import numba
import numpy as np


@numba.njit(cache=True, nogil=True, fastmath=True)
def weighted_norm_functional(aw, beta1, r2, sqrt_s, s, weights, apply_exp, out):
    """Per path ``p`` and horizon ``s[j]``: ``sum_k weights[j, k] * X_pjk``.

    ``X_pjk = sqrt((aw[k] + sqrt_s[j] * beta1[p, k])**2 + s[j] * r2[p, k])`` is
    the Bessel(3) bridge from ``a`` to 0 on ``[0, s[j]]`` built from unit
    Brownian bridges (``aw = a * (1 - v)``, ``r2`` = sum of squares of the two
    transverse components).  With ``apply_exp`` the result is ``exp(-sum)``.
    """
    n_paths, n_nodes = beta1.shape
    n_s = weights.shape[0]
    for p in range(n_paths):
        for j in range(n_s):
            sq = sqrt_s[j]
            sj = s[j]
            acc = 0.0
            for k in range(n_nodes):
                x = aw[k] + sq * beta1[p, k]
                acc += weights[j, k] * math.sqrt(x * x + sj * r2[p, k])
            out[p, j] = math.exp(-acc) if apply_exp else acc


@numba.njit(cache=True, nogil=True)
def first_passage_times(f_grid, dt, normals, uniforms, correction, out):
    """Hitting times of ``f`` by Brownian paths on a uniform grid.

    A step ``k -> k+1`` counts as a crossing when ``d = f - B`` becomes
    non-positive or, with ``correction``, with the bridge probability
    ``exp(-2 d_k d_{k+1} / dt)``.  Hits are stamped at the step midpoint;
    paths that never hit get ``inf``.
    """
    n_paths, n_steps = normals.shape
    sq = math.sqrt(dt)
    for p in range(n_paths):
        b = 0.0
        d_prev = f_grid[0]
        hit = np.inf
        for k in range(n_steps):
            b += sq * normals[p, k]
            d = f_grid[k + 1] - b
            if d <= 0.0:
                hit = (k + 0.5) * dt
                break
            if correction and uniforms[p, k] < math.exp(-2.0 * d_prev * d / dt):
                hit = (k + 0.5) * dt
                break
            d_prev = d
        out[p] = hit
