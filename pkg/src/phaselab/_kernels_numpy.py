"""Pure-numpy builds of the hot kernels.

Two kernel families live here (and in the numba twin module):

* Bessel functions of the first kind, integer order: ascending power
  series for ``x <= 12``, Miller's backward recurrence normalised with
  ``J_0 + 2 * sum(J_2k) = 1`` for larger arguments.
* Batched posterior statistics: per-trial normalisation of accumulated
  log-weights on a phase grid plus trapezoid moments, circular
  statistics and information gain against a uniform prior.

Callers are expected to pre-reduce Bessel arguments to ``q >= 0`` and
``x >= 0`` using the reflection identities; the kernels do not check.
"""

import numpy as np
from scipy.special import gammaln

_SERIES_CUTOFF = 12.0
_SERIES_TERMS = 84
_TINY_SEED = 1e-30
_RESCALE_LIMIT = 1e250


def _miller_start(order: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Backward-recurrence start index, rounded up to an even value."""
    base = np.maximum(order, np.ceil(x)).astype(np.int64)
    start = base + 20 + (3.0 * np.sqrt(base)).astype(np.int64)
    return start + (start % 2)


def _series_orders(q_max: int, x: np.ndarray) -> np.ndarray:
    """J_q(x) for q = 0..q_max by the ascending series; valid x <= 12."""
    out = np.empty((q_max + 1, x.size))
    half = 0.5 * x
    pos = half > 0.0
    log_half = np.log(np.where(pos, half, 1.0))
    ratio = -(half * half)
    for q in range(q_max + 1):
        lead = np.where(pos, np.exp(q * log_half - gammaln(q + 1.0)), 0.0)
        if q == 0:
            lead = np.where(pos, lead, 1.0)
        term = lead.copy()
        total = lead.copy()
        for m in range(1, _SERIES_TERMS):
            term *= ratio / (m * (m + q))
            total += term
        out[q] = total
    return out


def _miller_orders(q_max: int, x: np.ndarray) -> np.ndarray:
    """J_q(x) for q = 0..q_max by normalised backward recurrence; x > 0."""
    n = x.size
    start = _miller_start(np.full(n, q_max, dtype=np.int64), x)
    k_top = int(start.max())
    jp = np.zeros(n)
    jc = np.zeros(n)
    even_sum = np.zeros(n)
    rows = np.zeros((q_max + 1, n))
    for k in range(k_top, 0, -1):
        fresh = start == k
        if fresh.any():
            jc = np.where(fresh, _TINY_SEED, jc)
            jp = np.where(fresh, 0.0, jp)
        jm = (2.0 * k / x) * jc - jp
        jp = jc
        jc = jm
        order = k - 1
        if order % 2 == 0 and order > 0:
            even_sum += jm
        if order <= q_max:
            rows[order] = jm
        big = np.abs(jc) > _RESCALE_LIMIT
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            jc *= scale
            jp *= scale
            even_sum *= scale
            rows *= scale
    norm = jc + 2.0 * even_sum
    return rows / norm


def bessel_orders(q_max: int, x: np.ndarray) -> np.ndarray:
    """J_q(x) for q = 0..q_max over an array of non-negative arguments."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((q_max + 1, x.size))
    small = x <= _SERIES_CUTOFF
    if small.any():
        out[:, small] = _series_orders(q_max, x[small])
    if (~small).any():
        out[:, ~small] = _miller_orders(q_max, x[~small])
    return out


def bessel_pairs(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Element-wise J_{q_i}(x_i) for non-negative integer orders/arguments."""
    q = np.ascontiguousarray(q, dtype=np.int64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty(x.size)
    small = x <= _SERIES_CUTOFF
    if small.any():
        xs = x[small]
        qs = q[small]
        half = 0.5 * xs
        pos = half > 0.0
        log_half = np.log(np.where(pos, half, 1.0))
        lead = np.where(pos, np.exp(qs * log_half - gammaln(qs + 1.0)), 0.0)
        lead = np.where(~pos & (qs == 0), 1.0, lead)
        term = lead.copy()
        total = lead.copy()
        ratio = -(half * half)
        for m in range(1, _SERIES_TERMS):
            term *= ratio / (m * (m + qs))
            total += term
        out[small] = total
    large = ~small
    if large.any():
        xl = x[large]
        ql = q[large]
        n = xl.size
        start = _miller_start(ql, xl)
        k_top = int(start.max())
        jp = np.zeros(n)
        jc = np.zeros(n)
        even_sum = np.zeros(n)
        picked = np.zeros(n)
        for k in range(k_top, 0, -1):
            fresh = start == k
            if fresh.any():
                jc = np.where(fresh, _TINY_SEED, jc)
                jp = np.where(fresh, 0.0, jp)
            jm = (2.0 * k / xl) * jc - jp
            jp = jc
            jc = jm
            order = k - 1
            if order % 2 == 0 and order > 0:
                even_sum += jm
            hit = ql == order
            if hit.any():
                picked = np.where(hit, jm, picked)
            big = np.abs(jc) > _RESCALE_LIMIT
            if big.any():
                scale = np.where(big, 1e-250, 1.0)
                jc *= scale
                jp *= scale
                even_sum *= scale
                picked *= scale
        out[large] = picked / (jc + 2.0 * even_sum)
    return out


def posterior_stats(
    logw: np.ndarray,
    centered_nodes: np.ndarray,
    cos_nodes: np.ndarray,
    sin_nodes: np.ndarray,
    trap_w: np.ndarray,
    log_prior_density: float,
):
    """Normalise rows of log-weights and reduce them to posterior summaries.

    Returns (mean_offset, variance, dispersion, circular_mean, info_gain,
    map_index, ok).  ``mean_offset`` is relative to the node used to centre
    ``centered_nodes``; ``info_gain`` is the KL divergence in nats against
    the uniform prior with the given log density.  Rows whose weights are
    all zero are flagged ``ok = False`` and reported as NaN.
    """
    logw = np.ascontiguousarray(logw, dtype=np.float64)
    mx = logw.max(axis=1)
    ok = np.isfinite(mx)
    safe_mx = np.where(ok, mx, 0.0)
    with np.errstate(over="ignore"):
        w = np.exp(logw - safe_mx[:, None])
    tww = w * trap_w
    z = tww.sum(axis=1)
    z_safe = np.where(z > 0.0, z, 1.0)
    s_mean = tww @ centered_nodes
    s_second = tww @ (centered_nodes * centered_nodes)
    s_cos = tww @ cos_nodes
    s_sin = tww @ sin_nodes
    with np.errstate(invalid="ignore"):
        xlogx = np.where(w > 0.0, tww * (logw - safe_mx[:, None]), 0.0).sum(axis=1)
    mean_offset = s_mean / z_safe
    variance = np.maximum(s_second / z_safe - mean_offset * mean_offset, 0.0)
    re = s_cos / z_safe
    im = s_sin / z_safe
    dispersion = np.clip(1.0 - (re * re + im * im), 0.0, 1.0)
    circular_mean = np.arctan2(im, re)
    info_gain = np.maximum(
        xlogx / z_safe - np.log(z_safe) - log_prior_density, 0.0
    )
    map_index = np.argmax(logw, axis=1).astype(np.int64)
    bad = ~ok
    if bad.any():
        for arr in (mean_offset, variance, dispersion, circular_mean, info_gain):
            arr[bad] = np.nan
        map_index[bad] = 0
    return mean_offset, variance, dispersion, circular_mean, info_gain, map_index, ok
