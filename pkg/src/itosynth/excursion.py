"""Brownian excursions under the excursion measure and absorbed Brownian paths.

The excursion measure is normalised so that the maximum ``M`` satisfies
``n(M > x) = 1/x``.  Under ``n(. | M > eps)`` the maximum is ``eps / U`` with
``U`` uniform, and given ``M`` the path splits at its maximum into two
independent BES(3) legs.  Sampling in that order makes the law of ``M``
exact; only the lifetime carries discretisation error.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .rng import RngLike, as_generator


class SamplingError(RuntimeError):
    """Raised when a path fails to be absorbed within the step budget."""


@dataclass(frozen=True)
class StepPolicy:
    """Adaptive step rule ``h = clip((rel * gap)**2, dt, dt_max)``.

    ``gap`` is the distance from the current value to the nearest level the
    path is heading for (0, or the running target).  ``dt`` is the finest
    step, used near those levels.
    """
    dt: float = 1e-4
    rel: float = 0.1
    dt_max: float = np.inf
    max_steps: int = 5_000_000
    max_retries: int = 3

    def __post_init__(self):
        if not (self.dt > 0 and self.rel > 0 and self.dt_max >= self.dt):
            raise ValueError("need dt > 0, rel > 0 and dt_max >= dt")

    def args(self):
        return (float(self.dt), float(self.rel), float(self.dt_max), int(self.max_steps))


DEFAULT_POLICY = StepPolicy()


@dataclass(frozen=True, eq=False)
class Excursion:
    """Continuous path on a strictly increasing time grid, linear in between.

    The path is absorbed at 0 at its last grid time, which is its lifetime.
    The zero path is the single point ``(0, 0)``.
    """
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be equal-length 1-d arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("excursion values must be non-negative")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls) -> "Excursion":
        return cls(np.zeros(1), np.zeros(1))

    @property
    def lifetime(self) -> float:
        return float(self.times[-1])

    @property
    def start(self) -> float:
        return float(self.values[0])

    @property
    def height(self) -> float:
        return float(self.values.max())

    @property
    def is_zero(self) -> bool:
        return self.times.size == 1 and self.values[0] == 0.0

    def __len__(self):
        return self.times.size

    def __call__(self, t):
        """Evaluate at time(s) ``t``; the path is 0 after its lifetime."""
        return np.interp(t, self.times, self.values, right=0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x"])
            for t, x in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(x))])


@dataclass(frozen=True, eq=False)
class PathStats:
    """Maximum and first-hitting times of a sampled path.

    Hitting times use linear interpolation inside the grid step where the
    level is first reached; levels never reached give ``inf``.
    """
    M: float
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    _cummax: np.ndarray = field(repr=False)
    _cummin: np.ndarray = field(repr=False)

    def tau(self, a):
        a_arr = np.atleast_1d(np.asarray(a, dtype=float))
        out = np.array([self._tau1(x) for x in a_arr])
        return out if np.ndim(a) else float(out[0])

    def _tau1(self, a: float) -> float:
        t, v = self.times, self.values
        if v[0] == a:
            return float(t[0])
        if a > v[0]:
            if a > self.M:
                return np.inf
            i = int(np.searchsorted(self._cummax, a, side="left"))
        else:
            # running minimum is non-increasing; search on its negative
            i = int(np.searchsorted(-self._cummin, -a, side="left"))
            if i >= v.size:
                return np.inf
        v0, v1 = v[i - 1], v[i]
        frac = (a - v0) / (v1 - v0) if v1 != v0 else 1.0
        return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def path_stats(e: Excursion) -> PathStats:
    v = e.values
    return PathStats(float(v.max()), e.times, v,
                     np.maximum.accumulate(v), np.minimum.accumulate(v))


def _run(kernel, gen, args, policy: StepPolicy):
    for _ in range(policy.max_retries + 1):
        t, v, ok = kernel(gen, *args, *policy.args())
        if ok:
            return Excursion(t.copy(), v.copy())
    raise SamplingError(
        f"path not absorbed within {policy.max_steps} steps after "
        f"{policy.max_retries} retries")


def excursion_from(start: float, top: float, gen: np.random.Generator,
                   policy: StepPolicy = DEFAULT_POLICY) -> Excursion:
    """Brownian path from ``start`` with maximum exactly ``top``, killed at 0.

    For ``start = 0`` this is an excursion with maximum ``top``; for
    ``start > 0`` it is the law of a Brownian motion from ``start`` given that
    its maximum before absorption equals ``top``.
    """
    if not top > start >= 0:
        raise ValueError("need top > start >= 0")
    return _run(_kernels.excursion_from, gen, (float(start), float(top)), policy)


def sample_excursion_above(eps: float, rng: RngLike,
                           policy: StepPolicy = DEFAULT_POLICY) -> Excursion:
    """Draw an excursion from ``n(. | M > eps)``.

    Parameters
    ----------
    eps : float
        Height threshold, ``eps > 0``.
    rng : RngStream, Generator or int
        Randomness source.  A stream or seed yields a fresh generator, so
        repeated calls with the same stream return the same path.
    policy : StepPolicy
        Discretisation policy.

    Returns
    -------
    Excursion
        Starts and ends at 0, strictly positive in between, with maximum
        ``eps / U`` for a uniform ``U``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    gen = as_generator(rng)
    top = eps / (1.0 - gen.random())  # 1 - U lies in (0, 1]
    if top == eps:
        top = np.nextafter(eps, np.inf)
    return excursion_from(0.0, top, gen, policy)


def sample_absorbed_bm(x0: float, rng: RngLike,
                       policy: StepPolicy = DEFAULT_POLICY) -> Excursion:
    """Brownian motion from ``x0 > 0`` killed at 0.

    Uses plain Gaussian increments with a bridge correction for crossings
    between grid points, independently of the BES(3) construction used by
    :func:`sample_excursion_above`.
    """
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    gen = as_generator(rng)
    return _run(_kernels.absorbed_bm, gen, (float(x0),), policy)
