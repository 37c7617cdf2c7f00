"""Compiled path kernels.

All kernels take a ``numpy.random.Generator`` and advance it, so results are
reproducible from the seed.  Step sizes adapt to the distance between the
current value and the nearest level the path is heading for:
``h = clip((rel * gap)**2, dt, dt_max)``.  This keeps the relative resolution
constant over many orders of magnitude of excursion height, which a uniform
grid cannot afford for heavy-tailed lifetimes.
"""
import math

import numpy as np
from numba import njit

_GRID = 64


@njit(cache=True)
def _step(gap, dt, rel, dt_max):
    h = (rel * gap) ** 2
    if h < dt:
        h = dt
    if h > dt_max:
        h = dt_max
    return h


@njit(cache=True)
def _advance(t, inc):
    # keep times strictly increasing when t is large
    floor = t * 1e-15
    return t + (inc if inc > floor else floor)


@njit(cache=True)
def _grow(a, n):
    b = np.empty(2 * a.size)
    b[:n] = a[:n]
    return b


@njit(cache=True)
def excursion_from(gen, start, top, dt, rel, dt_max, max_steps):
    """Brownian path from ``start`` conditioned to reach ``top`` before 0,
    then killed at 0.

    Built from the decomposition at the maximum: a BES(3) from ``start`` run
    until it first hits ``top``, followed by ``top`` minus an independent
    BES(3) from 0 run until it first hits ``top``.  BES(3) is the norm of a
    3D Brownian motion, sampled exactly at grid times; level hits are clipped
    to the level with a linearly interpolated time.

    Returns ``(times, values, ok)``; ``ok`` is False if ``max_steps`` ran out.
    """
    ts = np.empty(256)
    vs = np.empty(256)
    ts[0] = 0.0
    vs[0] = start
    n = 1
    t = 0.0
    steps = 0

    # rising leg
    x = start
    y = 0.0
    z = 0.0
    r = start
    while True:
        g = r if r < top - r else top - r
        h = _step(g, dt, rel, dt_max)
        s = math.sqrt(h)
        x += s * gen.standard_normal()
        y += s * gen.standard_normal()
        z += s * gen.standard_normal()
        rn = math.sqrt(x * x + y * y + z * z)
        steps += 1
        if n == ts.size:
            ts = _grow(ts, n)
            vs = _grow(vs, n)
        if rn >= top:
            t = _advance(t, h * (top - r) / (rn - r))
            ts[n] = t
            vs[n] = top
            n += 1
            break
        t = _advance(t, h)
        r = rn
        ts[n] = t
        vs[n] = r
        n += 1
        if steps >= max_steps:
            return ts[:n], vs[:n], False

    # falling leg: value = top - R with R a BES(3) from 0
    x = 0.0
    y = 0.0
    z = 0.0
    r = 0.0
    while True:
        h = _step(top - r, dt, rel, dt_max)
        s = math.sqrt(h)
        x += s * gen.standard_normal()
        y += s * gen.standard_normal()
        z += s * gen.standard_normal()
        rn = math.sqrt(x * x + y * y + z * z)
        steps += 1
        if n == ts.size:
            ts = _grow(ts, n)
            vs = _grow(vs, n)
        if rn >= top:
            t = _advance(t, h * (top - r) / (rn - r))
            ts[n] = t
            vs[n] = 0.0
            n += 1
            break
        t = _advance(t, h)
        r = rn
        ts[n] = t
        vs[n] = top - r
        n += 1
        if steps >= max_steps:
            return ts[:n], vs[:n], False
    return ts[:n], vs[:n], True


@njit(cache=True)
def bridge_hit_time(gen, a, b, h):
    """First time a Brownian bridge from ``a > 0`` to ``-b <= 0`` (or a bridge
    from ``a`` to ``b`` known to touch 0) over ``[0, h]`` hits 0.

    The density is proportional to
    ``u**-1.5 * (h-u)**-0.5 * exp(-a**2/(2u) - b**2/(2(h-u)))``; it is
    inverted numerically on a Chebyshev-clustered grid.
    """
    k = _GRID
    edges = np.empty(k + 1)
    for i in range(k + 1):
        edges[i] = 0.5 * (1.0 - math.cos(math.pi * i / k))
    logw = np.empty(k)
    A = a * a / (2.0 * h)
    B = b * b / (2.0 * h)
    mx = -1e300
    for i in range(k):
        sm = 0.5 * (edges[i] + edges[i + 1])
        lw = (-1.5 * math.log(sm) - 0.5 * math.log(1.0 - sm) - A / sm
              - B / (1.0 - sm) + math.log(edges[i + 1] - edges[i]))
        logw[i] = lw
        if lw > mx:
            mx = lw
    cum = np.empty(k + 1)
    cum[0] = 0.0
    for i in range(k):
        cum[i + 1] = cum[i] + math.exp(logw[i] - mx)
    u = gen.random() * cum[k]
    i = 0
    while i < k - 1 and cum[i + 1] < u:
        i += 1
    w = cum[i + 1] - cum[i]
    frac = (u - cum[i]) / w if w > 0.0 else 0.5
    return h * (edges[i] + frac * (edges[i + 1] - edges[i]))


@njit(cache=True)
def absorbed_bm(gen, x0, dt, rel, dt_max, max_steps):
    """Brownian motion from ``x0 > 0`` killed at its first hit of 0.

    Gaussian increments; a step between two positive values is declared
    absorbed with the bridge crossing probability ``exp(-2 v0 v1 / h)`` and the
    hit time inside the step is sampled from the bridge first-passage law.
    """
    ts = np.empty(256)
    vs = np.empty(256)
    ts[0] = 0.0
    vs[0] = x0
    n = 1
    t = 0.0
    v = x0
    steps = 0
    while True:
        h = _step(v, dt, rel, dt_max)
        vn = v + math.sqrt(h) * gen.standard_normal()
        steps += 1
        if n == ts.size:
            ts = _grow(ts, n)
            vs = _grow(vs, n)
        hit = vn <= 0.0
        if not hit:
            hit = gen.random() < math.exp(-2.0 * v * vn / h)
        if hit:
            ts[n] = _advance(t, bridge_hit_time(gen, v, abs(vn), h))
            vs[n] = 0.0
            n += 1
            return ts[:n], vs[:n], True
        t = _advance(t, h)
        v = vn
        ts[n] = t
        vs[n] = v
        n += 1
        if steps >= max_steps:
            return ts[:n], vs[:n], False
