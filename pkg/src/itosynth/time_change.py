"""Clock ``A_m``, time-changed excursions and the laws ``Q_m^x`` and ``n_m``.

``A_m(t) = int l(t, x) dm(x)`` converts Brownian time into the time of the
diffusion with speed measure ``m``; ``e_m(t) = e(A_m^{-1}(t))``.

The clock is computed segment by segment.  On a grid step where the linear
interpolant moves from ``lo`` to ``hi`` in time ``h`` it spends time
``h / (hi - lo)`` per unit level, so the step contributes
``h (W(hi) - W(lo)) / (2 (hi - lo))`` with ``W`` a primitive of ``dm``.
Above the bottom level bin ``W`` is the exact primitive of ``m``; inside
``[0, dx)`` it uses the midpoint density, which keeps singular densities
such as ``1/x`` finite.  Atoms at ``a`` are spread over ``[a, a + dx)``,
which reproduces ``mass * l(t, a)`` of the binned local time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .excursion import (DEFAULT_POLICY, Excursion, StepPolicy, path_stats,
                        sample_excursion_above)
from .local_time import LocalTimeField, default_dx
from .measures import SpeedMeasure
from .rng import RngLike, as_generator


class ClockError(ArithmeticError):
    """Raised when the clock is not finite on a path."""


@dataclass(frozen=True, eq=False)
class Clock:
    times: np.ndarray
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values[-1])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def inverse(self, a):
        """``A^{-1}(a) = inf{t : A(t) > a}`` (right-continuous inverse)."""
        a = np.asarray(a, dtype=float)
        A, t = self.values, self.times
        i = np.searchsorted(A, a, side="right")
        i = np.clip(i, 1, A.size - 1)
        a0, a1 = A[i - 1], A[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(a1 > a0, (a - a0) / (a1 - a0), 1.0)
        out = t[i - 1] + np.clip(frac, 0.0, 1.0) * (t[i] - t[i - 1])
        return np.where(a >= A[-1], t[-1], out)


def _primitive(m: SpeedMeasure, dx: float):
    """``W`` with ``W' = dm`` above ``dx`` and the midpoint density below."""
    base = float(m.density(np.array([0.5 * dx]))[0])
    F_dx = float(m.antiderivative(np.array([dx]))[0])

    def W(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            upper = np.asarray(m.antiderivative(np.maximum(x, dx)), dtype=float) - F_dx
        out = base * np.minimum(x, dx) + upper
        for a, w in m.atoms:
            out = out + w * np.clip((x - a) / dx, 0.0, 1.0)
        return out

    def dW(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.where(x < dx, base, np.asarray(m.density(np.maximum(x, dx)), dtype=float))
        for a, w in m.atoms:
            out = out + w / dx * ((x >= a) & (x < a + dx))
        return out

    return W, dW


def clock_increments(values: np.ndarray, times: np.ndarray, m: SpeedMeasure,
                     dx: float) -> np.ndarray:
    """Per-step clock increments of the linear interpolant of a path."""
    lo = np.minimum(values[:-1], values[1:])
    hi = np.maximum(values[:-1], values[1:])
    h = np.diff(times)
    W, dW = _primitive(m, dx)
    span = hi - lo
    small = span <= 1e-12 * np.maximum(hi, 1e-300)
    with np.errstate(all="ignore"):
        steep = h * (W(hi) - W(lo)) / (2.0 * np.where(small, 1.0, span))
        flat = 0.5 * h * dW(0.5 * (lo + hi))
    return np.where(small, flat, steep)


def clock(e: Excursion, m: SpeedMeasure, dx: float | None = None) -> Clock:
    """Clock ``A_m`` on the grid of ``e``.

    Parameters
    ----------
    e : Excursion
    m : SpeedMeasure
    dx : float, optional
        Width of the bottom level bin (and of atom bins).  Defaults to
        ``min(1e-3, M/500)``.

    Raises
    ------
    ClockError
        If an increment is not finite.
    """
    if e.times.size == 1:
        return Clock(e.times.copy(), np.zeros(1))
    if dx is None:
        dx = default_dx(e.height)
    inc = clock_increments(e.values, e.times, m, dx)
    if not np.all(np.isfinite(inc)):
        bad = int(np.argmin(np.isfinite(inc)))
        raise ClockError(f"clock diverges on step {bad} near level {e.values[bad]:.3g}; "
                         f"the speed measure {m.label!r} is not integrable along this path")
    return Clock(e.times.copy(), np.concatenate([[0.0], np.cumsum(inc)]))


def clock_from_field(f: LocalTimeField, m: SpeedMeasure) -> np.ndarray:
    """Clock values at the field's times as ``sum_k l(t, x_k) m((x_k, x_k+dx])``
    plus ``mass * l(t, a)`` for atoms (bottom bin by its midpoint density)."""
    dx = f.dx
    edges = np.append(f.levels, f.levels[-1] + dx)
    with np.errstate(all="ignore"):
        w = np.diff(np.asarray(m.antiderivative(edges), dtype=float))
    w[0] = float(m.density(np.array([0.5 * dx]))[0]) * dx
    A = f.values @ w
    for a, mass in m.atoms:
        A = A + mass * f.at(f.times, a)
    return A


def time_change_excursion(e: Excursion, m: SpeedMeasure, dx: float | None = None,
                          A: Clock | None = None) -> Excursion:
    """``e_m``: the values of ``e`` placed at times ``A_m(t_i)``.

    Grid points where the clock does not advance are merged, keeping the
    last one, which is the right-continuous inverse convention.
    """
    if e.times.size == 1:
        return e
    if A is None:
        A = clock(e, m, dx)
    t, v = A.values, e.values
    keep = np.append(np.diff(t) > 0, True)
    return Excursion(t[keep], v[keep])


def shift(e: Excursion, x: float) -> Excursion:
    """``theta_x(e) = e(tau_x + .)`` if ``M(e) > x``, else the zero path."""
    if x < 0:
        raise ValueError("x must be non-negative")
    if e.height <= x:
        return Excursion.zero()
    if x == 0 and e.start == 0:
        return e
    tau = path_stats(e).tau(x)
    t, v = e.times, e.values
    i = int(np.searchsorted(t, tau, side="right"))
    return Excursion(np.concatenate([[0.0], t[i:] - tau]), np.concatenate([[x], v[i:]]))


def sample_Qmx(m: SpeedMeasure, x: float, rng: RngLike,
               policy: StepPolicy = DEFAULT_POLICY, dx: float | None = None) -> Excursion:
    """Path of the diffusion with speed measure ``m`` from ``x``, killed at 0.

    Draws ``e ~ n(. | M > x)`` and returns ``(theta_x e)_m``.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    e = sample_excursion_above(x, as_generator(rng), policy)
    return time_change_excursion(shift(e, x), m, dx)


def sample_nm_above(m: SpeedMeasure, eps: float, rng: RngLike,
                    policy: StepPolicy = DEFAULT_POLICY, dx: float | None = None) -> Excursion:
    """Excursion of the ``m``-diffusion under ``n_m(. | M > eps)``; the
    conditioning event has mass ``1/eps``."""
    e = sample_excursion_above(eps, as_generator(rng), policy)
    return time_change_excursion(e, m, dx)
