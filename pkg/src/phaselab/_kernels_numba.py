"""Numba @njit builds of the hot kernels.

Same contracts as :mod:`phaselab._kernels_numpy`; see that module for the
algorithm notes.  Import only when numba is available.
"""

import math

import numpy as np
from numba import njit

_SERIES_CUTOFF = 12.0
_SERIES_TERMS = 84
_TINY_SEED = 1e-30
_RESCALE_LIMIT = 1e250


@njit(cache=True)
def _series_scalar(q, x):
    half = 0.5 * x
    if half == 0.0:
        return 1.0 if q == 0 else 0.0
    lead = math.exp(q * math.log(half) - math.lgamma(q + 1.0))
    term = lead
    total = lead
    ratio = -(half * half)
    for m in range(1, _SERIES_TERMS):
        term *= ratio / (m * (m + q))
        total += term
    return total


@njit(cache=True)
def _miller_start_scalar(order, x):
    base = order
    cx = int(math.ceil(x))
    if cx > base:
        base = cx
    start = base + 20 + int(3.0 * math.sqrt(base))
    if start % 2 == 1:
        start += 1
    return start


@njit(cache=True)
def _miller_scalar(q, x):
    start = _miller_start_scalar(q, x)
    jp = 0.0
    jc = _TINY_SEED
    even_sum = 0.0
    picked = 0.0
    for k in range(start, 0, -1):
        jm = (2.0 * k / x) * jc - jp
        jp = jc
        jc = jm
        order = k - 1
        if order % 2 == 0 and order > 0:
            even_sum += jm
        if order == q:
            picked = jm
        if abs(jc) > _RESCALE_LIMIT:
            jc *= 1e-250
            jp *= 1e-250
            even_sum *= 1e-250
            picked *= 1e-250
    return picked / (jc + 2.0 * even_sum)


@njit(cache=True)
def bessel_pairs(q, x):
    out = np.empty(x.size)
    for i in range(x.size):
        if x[i] <= _SERIES_CUTOFF:
            out[i] = _series_scalar(q[i], x[i])
        else:
            out[i] = _miller_scalar(q[i], x[i])
    return out


@njit(cache=True)
def bessel_orders(q_max, x):
    rows = np.zeros((q_max + 1, x.size))
    for i in range(x.size):
        xi = x[i]
        if xi <= _SERIES_CUTOFF:
            for q in range(q_max + 1):
                rows[q, i] = _series_scalar(q, xi)
        else:
            start = _miller_start_scalar(q_max, xi)
            jp = 0.0
            jc = _TINY_SEED
            even_sum = 0.0
            for k in range(start, 0, -1):
                jm = (2.0 * k / xi) * jc - jp
                jp = jc
                jc = jm
                order = k - 1
                if order % 2 == 0 and order > 0:
                    even_sum += jm
                if order <= q_max:
                    rows[order, i] = jm
                if abs(jc) > _RESCALE_LIMIT:
                    jc *= 1e-250
                    jp *= 1e-250
                    even_sum *= 1e-250
                    for q in range(q_max + 1):
                        rows[q, i] *= 1e-250
            norm = jc + 2.0 * even_sum
            for q in range(q_max + 1):
                rows[q, i] /= norm
    return rows


@njit(cache=True)
def posterior_stats(
    logw, centered_nodes, cos_nodes, sin_nodes, trap_w, log_prior_density
):
    n_rows, n_nodes = logw.shape
    mean_offset = np.empty(n_rows)
    variance = np.empty(n_rows)
    dispersion = np.empty(n_rows)
    circular_mean = np.empty(n_rows)
    info_gain = np.empty(n_rows)
    map_index = np.empty(n_rows, dtype=np.int64)
    ok = np.empty(n_rows, dtype=np.bool_)
    for t in range(n_rows):
        mx = -np.inf
        best = 0
        for i in range(n_nodes):
            v = logw[t, i]
            if v > mx:
                mx = v
                best = i
        if not np.isfinite(mx):
            mean_offset[t] = np.nan
            variance[t] = np.nan
            dispersion[t] = np.nan
            circular_mean[t] = np.nan
            info_gain[t] = np.nan
            map_index[t] = 0
            ok[t] = False
            continue
        z = 0.0
        s_mean = 0.0
        s_second = 0.0
        s_cos = 0.0
        s_sin = 0.0
        xlogx = 0.0
        for i in range(n_nodes):
            w = math.exp(logw[t, i] - mx)
            tw = w * trap_w[i]
            z += tw
            c = centered_nodes[i]
            s_mean += tw * c
            s_second += tw * c * c
            s_cos += tw * cos_nodes[i]
            s_sin += tw * sin_nodes[i]
            if w > 0.0:
                xlogx += tw * (logw[t, i] - mx)
        m1 = s_mean / z
        var = s_second / z - m1 * m1
        if var < 0.0:
            var = 0.0
        re = s_cos / z
        im = s_sin / z
        disp = 1.0 - (re * re + im * im)
        if disp < 0.0:
            disp = 0.0
        elif disp > 1.0:
            disp = 1.0
        kl = xlogx / z - math.log(z) - log_prior_density
        if kl < 0.0:
            kl = 0.0
        mean_offset[t] = m1
        variance[t] = var
        dispersion[t] = disp
        circular_mean[t] = math.atan2(im, re)
        info_gain[t] = kl
        map_index[t] = best
        ok[t] = True
    return mean_offset, variance, dispersion, circular_mean, info_gain, map_index, ok
