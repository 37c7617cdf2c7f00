"""Occupation-density local time of sampled paths.

Local time uses the factor-2 convention: the time spent in a set ``A`` equals
``2 * integral_A l(t, x) dx``.  The estimator is the occupation of the bin
``[x, x + dx)`` by the linear interpolant, divided by ``2 dx``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .excursion import Excursion


class DegenerateGridError(ValueError):
    """Raised when the level step exceeds the path height."""


def _time_below(lo, hi, h, x):
    """Time each segment spends strictly below level ``x`` (broadcasts)."""
    span = hi - lo
    flat = span <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(flat, (lo < x).astype(float), (x - lo) / np.where(flat, 1.0, span))
    return h * np.clip(frac, 0.0, 1.0)


def _segments(e: Excursion):
    v = e.values
    lo = np.minimum(v[:-1], v[1:])
    hi = np.maximum(v[:-1], v[1:])
    return lo, hi, np.diff(e.times)


def occupation_time(e: Excursion, a: float, b: float) -> float:
    """Exact time the linear interpolant of ``e`` spends in ``[a, b)``."""
    if e.times.size < 2:
        return 0.0
    lo, hi, h = _segments(e)
    return float(np.sum(_time_below(lo, hi, h, b) - _time_below(lo, hi, h, a)))


@dataclass(frozen=True, eq=False)
class LocalTimeField:
    """Local time on a (time x level) grid.

    ``values[i, k]`` is ``l(times[i], levels[k])``, constant in ``x`` on the
    bin ``[levels[k], levels[k] + dx)``.
    """
    times: np.ndarray
    levels: np.ndarray
    dx: float
    values: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def at(self, t, x):
        """``l(t, x)``: piecewise constant in ``x``, linear in ``t``."""
        k = np.floor(np.asarray(x, dtype=float) / self.dx).astype(int)
        inside = (k >= 0) & (k < self.levels.size)
        kk = np.clip(k, 0, self.levels.size - 1)
        col = self.values[:, kk]
        if np.ndim(col) == 1:
            out = np.interp(t, self.times, col)
        else:
            out = np.array([np.interp(t, self.times, c) for c in col.T])
        return np.where(inside, out, 0.0)

    def integral(self, a: float, b: float, row: int = -1) -> float:
        """``integral_a^b l(t, x) dx`` at grid time ``times[row]``."""
        left = self.levels
        overlap = np.clip(np.minimum(b, left + self.dx) - np.maximum(a, left), 0.0, None)
        return float(np.dot(self.values[row], overlap))


MAX_CELLS = 50_000_000


def default_dx(height: float) -> float:
    return min(1e-3, height / 500.0)


def estimate_local_time(e: Excursion, dx: float | None = None,
                        times: np.ndarray | None = None,
                        chunk: int = 4096) -> LocalTimeField:
    """Bin estimator of ``l(t, x)`` for ``t`` in the path grid (or ``times``).

    Parameters
    ----------
    e : Excursion
    dx : float, optional
        Level bin width; defaults to ``min(1e-3, M/500)``.
    times : array, optional
        Subset of grid times at which to report the field.  Defaults to all
        grid times.  Must be grid times of ``e``.
    chunk : int
        Segments processed per block, bounding memory use.

    Raises
    ------
    DegenerateGridError
        If ``dx`` exceeds the path height.
    ValueError
        If the field would exceed ``MAX_CELLS`` entries.
    """
    M = e.height
    if dx is None:
        dx = default_dx(M) if M > 0 else 1.0
    if not dx > 0:
        raise ValueError("dx must be positive")
    if M > 0 and dx > M:
        raise DegenerateGridError(f"dx={dx} exceeds path height {M}")
    K = int(np.floor(M / dx)) + 1
    levels = dx * np.arange(K)
    edges = dx * np.arange(K + 1)
    if times is None:
        rows = np.arange(e.times.size)
    else:
        rows = np.searchsorted(e.times, np.asarray(times, dtype=float))
        if np.any(rows >= e.times.size) or not np.allclose(e.times[rows], times):
            raise ValueError("requested times must lie on the path grid")
    if rows.size * K > MAX_CELLS:
        raise ValueError(f"field of {rows.size} x {K} cells is too large; "
                         "pass fewer times or a coarser dx")
    out = np.zeros((rows.size, K))
    if e.times.size > 1:
        lo, hi, h = _segments(e)
        acc = np.zeros(K)
        # row r needs the occupation of segments [0, rows[r])
        want = {int(r): i for i, r in enumerate(rows)}
        if 0 in want:
            out[want[0]] = 0.0
        nseg = lo.size
        chunk = max(1, min(chunk, 4_000_000 // (K + 1)))
        for s0 in range(0, nseg, chunk):
            s1 = min(nseg, s0 + chunk)
            below = _time_below(lo[s0:s1, None], hi[s0:s1, None], h[s0:s1, None], edges[None, :])
            occ = np.diff(below, axis=1)
            cum = acc + np.cumsum(occ, axis=0)
            for r in range(s0 + 1, s1 + 1):
                if r in want:
                    out[want[r]] = cum[r - s0 - 1]
            acc = cum[-1]
    return LocalTimeField(e.times[rows].copy(), levels, float(dx), out / (2.0 * dx))


def occupation_residual(e: Excursion, f: LocalTimeField, a: float, b: float,
                        floor: float = 1e-12) -> float:
    """Relative gap between exact occupation of ``[a, b)`` and ``2 * int_a^b l``.

    Uses the field at its last time, which should be the lifetime of ``e``.
    """
    if not (0 <= a < b):
        raise ValueError("need 0 <= a < b")
    occ = occupation_time(e, a, b)
    est = 2.0 * f.integral(a, b)
    return abs(occ - est) / max(occ, floor)
