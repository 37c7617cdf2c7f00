"""Synthesis of the half-line process from a Poisson point process of excursions.

Points ``(s, z, e)`` arrive with intensity ``ds dz n(de)`` on
``(0, S] x (0, d(J)) x {M > max(J(z), eps)}``.  Each point contributes the
piece ``e_{m,J(z)}``: the part of ``e`` after it first reaches ``J(z)``,
time-changed by the speed measure.  The inverse boundary local time is

    eta(s) = r s + sum_{s_i <= s} lifetime(e_{m,J(z_i)}),

and the process runs piece ``i`` on ``[eta(s_i-), eta(s_i))`` and sits at 0
otherwise.  Excursions of height at most ``eps`` above their entry level are
dropped; ``eps`` is the only truncation.

Given its maximum, the part of a Brownian excursion after level ``a`` is a
BES(3) from ``a`` to the maximum followed by a BES(3) descent, so pieces are
sampled directly from ``a = J(z)`` without simulating the discarded prefix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .excursion import DEFAULT_POLICY, Excursion, StepPolicy, excursion_from
from .existence import check_existence
from .measures import BoundaryTriple, JumpFunction, ModelError, _bisect_increasing
from .rng import RngLike, RngStream, as_generator
from .time_change import Clock, clock, time_change_excursion


class HorizonError(RuntimeError):
    """The sampled local-time horizon does not cover the requested time."""


# ---------------------------------------------------------------------------
# marks


class MarkSampler:
    """Sampler of the mark ``z`` with density ``1 / max(J(z), eps)`` on
    ``(0, d(J))``.

    The density is constant ``1/eps`` on ``(0, z_eps]`` with
    ``z_eps = J^{-1}(eps)``, tabulated on a logarithmic grid of ``knots``
    points above it, and beyond ``z_hi = J^{-1}(x_hi)`` sampled exactly
    through the entry level, whose law there is ``j`` restricted to
    ``(x_hi, inf)``.
    """

    def __init__(self, J: JumpFunction, eps: float, knots: int = 4096):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.J, self.eps = J, float(eps)
        d = J.d
        z_eps = min(float(J.inverse(self.eps)), d)
        self.z_eps = z_eps
        self.low_mass = z_eps / self.eps
        self.grid = None
        self.grid_mass = 0.0
        self.tail_mass = 0.0
        self.x_hi = math.inf
        if z_eps >= d:
            self.total = self.low_mass
            return
        if math.isfinite(d):
            z_hi = d * (1.0 - 1e-12)
        else:
            self.x_hi = self.eps * 1e8
            z_hi = float(J.inverse(self.x_hi))
            self.tail_mass = float(J.level_tail(self.x_hi))
        z_lo = z_eps if z_eps > 0 else z_hi * 1e-12
        if z_hi > z_lo:
            u = np.linspace(np.log(z_lo), np.log(z_hi), knots)
            z = np.exp(u)
            with np.errstate(all="ignore"):
                g = z / np.maximum(np.asarray(J(z), dtype=float), self.eps)
            g = np.where(np.isfinite(g), g, 0.0)
            cdf = integrate.cumulative_trapezoid(g, u, initial=0.0)
            self.grid = (z, cdf)
            self.grid_mass = float(cdf[-1])
        self.total = self.low_mass + self.grid_mass + self.tail_mass

    def sample(self, n: int, gen: np.random.Generator):
        """Return ``(z, J(z))`` for ``n`` independent marks."""
        u = gen.random(n) * self.total
        z = np.empty(n)
        level = np.empty(n)
        low = u < self.low_mass
        z[low] = u[low] * self.eps
        mid = (~low) & (u < self.low_mass + self.grid_mass)
        if np.any(mid):
            zg, cdf = self.grid
            z[mid] = np.interp(u[mid] - self.low_mass, cdf, zg)
        lowmid = low | mid
        if np.any(lowmid):
            level[lowmid] = np.asarray(self.J(z[lowmid]), dtype=float)
        far = ~lowmid
        if np.any(far):
            target = self.tail_mass - (u[far] - self.low_mass - self.grid_mass)
            target = np.clip(target, 1e-300, self.tail_mass)
            # level y above x_hi with j((y, inf)) = target
            y = _bisect_increasing(lambda v: -np.asarray(self.J.level_tail(v)), -target,
                                   self.x_hi, 1e100)
            level[far] = y
            z[far] = np.asarray(self.J.inverse(y), dtype=float)
        return z, level


@lru_cache(maxsize=64)
def _sampler(J: JumpFunction, eps: float) -> MarkSampler:
    return MarkSampler(J, eps)


def intensity(J: JumpFunction | None, eps: float) -> float:
    """``I(eps) = int_(0,d(J)) dz / max(J(z), eps)``, the rate of retained
    points per unit local time."""
    if J is None:
        return 0.0
    return _sampler(J, float(eps)).total


@lru_cache(maxsize=64)
def _checked(b: BoundaryTriple) -> None:
    rep = check_existence(b)
    if not rep.exists:
        raise ModelError(f"no process for this triple: {rep.verdict} ({'; '.join(rep.notes)})")


def _piece(level: float, eps: float, gen, policy: StepPolicy) -> Excursion:
    top = max(level, eps) / (1.0 - gen.random())
    if top <= level:
        top = np.nextafter(level, np.inf)
    return excursion_from(level, top, gen, policy)


# ---------------------------------------------------------------------------
# point process and eta


@dataclass(frozen=True, eq=False)
class MarkedPointProcess:
    """Retained points on ``(0, horizon]``.

    ``pieces[i]`` is the excursion after its first visit to ``levels[i]``,
    in Brownian time (not yet time-changed).
    """
    horizon: float
    eps: float
    intensity: float
    s: np.ndarray
    z: np.ndarray
    levels: np.ndarray
    pieces: tuple = field(repr=False)

    @property
    def points(self):
        return list(zip(self.s, self.z, self.pieces))

    def __len__(self):
        return self.s.size


def _draw_points(J, eps, s0, s1, gen, policy):
    if J is None:
        return np.empty(0), np.empty(0), np.empty(0), ()
    samp = _sampler(J, float(eps))
    n = gen.poisson(samp.total * (s1 - s0))
    s = np.sort(gen.uniform(s0, s1, n))
    z, levels = samp.sample(n, gen)
    pieces = tuple(_piece(float(a), eps, gen, policy) for a in levels)
    return s, z, levels, pieces


def sample_point_process(b: BoundaryTriple, S: float, eps: float, rng: RngLike,
                         policy: StepPolicy = DEFAULT_POLICY,
                         check: bool = True) -> MarkedPointProcess:
    """Poisson point process of retained excursions on ``(0, S]``.

    Parameters
    ----------
    b : BoundaryTriple
    S : float
        Local-time horizon.
    eps : float
        Truncation height.
    rng : RngStream, Generator or int
    policy : StepPolicy
    check : bool
        Run the existence test first (cached per triple).
    """
    if not (S > 0 and eps > 0):
        raise ValueError("S and eps must be positive")
    if check:
        _checked(b)
    gen = as_generator(rng)
    s, z, levels, pieces = _draw_points(b.J, eps, 0.0, S, gen, policy)
    return MarkedPointProcess(float(S), float(eps), intensity(b.J, eps), s, z, levels, pieces)


def extend(pp: MarkedPointProcess, b: BoundaryTriple, S_new: float, gen: np.random.Generator,
           policy: StepPolicy = DEFAULT_POLICY) -> MarkedPointProcess:
    """Add independent points on ``(pp.horizon, S_new]``."""
    s, z, levels, pieces = _draw_points(b.J, pp.eps, pp.horizon, S_new, gen, policy)
    return MarkedPointProcess(float(S_new), pp.eps, pp.intensity,
                              np.concatenate([pp.s, s]), np.concatenate([pp.z, z]),
                              np.concatenate([pp.levels, levels]), pp.pieces + pieces)


@dataclass(frozen=True, eq=False)
class Staircase:
    """``eta(s) = drift * s + sum of jumps at points <= s`` on ``[0, horizon]``."""
    s: np.ndarray
    jumps: np.ndarray
    drift: float
    horizon: float

    @property
    def _cum(self):
        return np.concatenate([[0.0], np.cumsum(self.jumps)])

    def __call__(self, s):
        k = np.searchsorted(self.s, s, side="right")
        return self.drift * np.asarray(s, dtype=float) + self._cum[k]

    def left(self, s):
        k = np.searchsorted(self.s, s, side="left")
        return self.drift * np.asarray(s, dtype=float) + self._cum[k]

    @property
    def end(self) -> float:
        return float(self(self.horizon))

    def inverse(self, t):
        """Local time ``L(t) = inf{s : eta(s) > t}``; ``inf`` beyond the horizon."""
        t = np.asarray(t, dtype=float)
        cum = self._cum
        after = self.drift * self.s + cum[1:]  # eta(s_k)
        k = np.searchsorted(after, t, side="right")  # first jump with eta(s_k) > t
        before = cum[k]  # jump total before point k
        with np.errstate(divide="ignore", invalid="ignore"):
            s_drift = np.where(self.drift > 0, (t - before) / self.drift, np.inf)
        s_jump = np.where(k < self.s.size, self.s[np.minimum(k, self.s.size - 1)] if self.s.size else np.inf, np.inf)
        out = np.minimum(s_drift, s_jump)
        return np.where(out <= self.horizon, np.maximum(out, 0.0), np.inf)


def _time_changed(pp: MarkedPointProcess, b: BoundaryTriple):
    return tuple(time_change_excursion(p, b.m) for p in pp.pieces)


def build_eta(pp: MarkedPointProcess, b: BoundaryTriple) -> Staircase:
    """Inverse local time from the points of ``pp`` and the triple ``b``."""
    jumps = np.array([clock(p, b.m).total for p in pp.pieces])
    return Staircase(pp.s, jumps, float(b.r), pp.horizon)


@dataclass(frozen=True, eq=False)
class SyntheticPath:
    """Sample path on ``[0, T]`` with its inverse local time."""
    eta: Staircase
    starts: np.ndarray
    pieces: tuple = field(repr=False)
    T: float = 0.0
    eps: float = 0.0
    intensity: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        out = np.zeros(flat.shape)
        idx = np.searchsorted(self.starts, flat, side="right") - 1
        for n, (tt, i) in enumerate(zip(flat, idx)):
            if i >= 0:
                p = self.pieces[i]
                dt = tt - self.starts[i]
                if dt < p.lifetime:
                    out[n] = np.interp(dt, p.times, p.values)
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def arrays(self):
        """``(times, values)`` on ``[0, T]``; a repeated time marks a jump,
        the later entry being the value after it."""
        ts, vs = [0.0], [0.0]
        for a, p in zip(self.starts, self.pieces):
            if a >= self.T:
                break
            if a > ts[-1] or vs[-1] != 0.0:
                ts.append(a)
                vs.append(0.0)
            pt = a + p.times
            keep = pt <= self.T
            ts.extend(pt[keep])
            vs.extend(p.values[keep])
            if not keep.all():
                ts.append(self.T)
                vs.append(float(np.interp(self.T - a, p.times, p.values)))
        if ts[-1] < self.T:
            ts.append(self.T)
            vs.append(0.0)
        return np.array(ts), np.array(vs)

    def to_csv(self, path) -> None:
        t, x = self.arrays()
        _write_csv(path, ("t", "x"), t, x)

    def eta_arrays(self):
        """``(s, eta)`` rows: a repeated ``s`` marks a jump of ``eta``."""
        e = self.eta
        rows_s, rows_e = [0.0], [0.0]
        for s in e.s:
            rows_s += [s, s]
            rows_e += [float(e.left(s)), float(e(s))]
        rows_s.append(e.horizon)
        rows_e.append(e.end)
        return np.array(rows_s), np.array(rows_e)

    def eta_to_csv(self, path) -> None:
        s, e = self.eta_arrays()
        _write_csv(path, ("s", "eta"), s, e)


def _write_csv(path, header, a, b):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for x, y in zip(a, b):
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def build_path(pp: MarkedPointProcess, b: BoundaryTriple, T: float) -> SyntheticPath:
    """Assemble the path on ``[0, T]``; needs ``eta(horizon) >= T``."""
    pieces = _time_changed(pp, b)
    jumps = np.array([p.lifetime for p in pieces])
    eta = Staircase(pp.s, jumps, float(b.r), pp.horizon)
    if eta.end < T:
        raise HorizonError(f"eta(S)={eta.end:.4g} < T={T:.4g}; enlarge the local-time horizon")
    starts = np.asarray(eta.left(pp.s)) if pp.s.size else np.empty(0)
    meta = {"eps": pp.eps, "intensity": pp.intensity, "horizon": pp.horizon,
            "intensity_half_eps": intensity(b.J, pp.eps / 2)}
    return SyntheticPath(eta, starts, pieces, float(T), pp.eps, pp.intensity, meta)


def synthesize(b: BoundaryTriple, T: float, eps: float, rng: RngLike, S: float = 1.0,
               policy: StepPolicy = DEFAULT_POLICY, max_doublings: int = 60):
    """Sample a path on ``[0, T]``, doubling the local-time horizon until
    ``eta`` covers ``T``.  Returns ``(path, point_process)``."""
    _checked(b)
    if b.J is None and b.r == 0:
        raise ModelError("trivial triple with r = 0")
    gen = as_generator(rng)
    pp = sample_point_process(b, S, eps, gen, policy, check=False)
    for _ in range(max_doublings + 1):
        try:
            return build_path(pp, b, T), pp
        except HorizonError:
            pp = extend(pp, b, 2.0 * pp.horizon, gen, policy)
    raise HorizonError(f"eta did not reach T={T} after {max_doublings} doublings")


def normalization_constant(sp: SyntheticPath) -> float:
    """Estimate of ``C = r + int (1 - e^{-t}) nu(dt)`` from one path, where
    ``nu`` is the Levy measure of ``eta``."""
    e = sp.eta
    return float(e.drift + np.sum(-np.expm1(-e.jumps)) / e.horizon)


def boundary_local_time(sp: SyntheticPath, normalize: bool = False):
    """Boundary local time ``L(t) = inf{s : eta(s) > t}`` as a callable.

    With this scale ``E int e^{-t} dL(t) = 1 / C``.  ``normalize=True``
    returns ``C * L`` instead, for which that expectation is 1.
    """
    k = normalization_constant(sp) if normalize else 1.0

    def L(t):
        return k * sp.eta.inverse(t)
    return L


# ---------------------------------------------------------------------------
# Monte Carlo functionals


def _gens(rng: RngLike, n: int):
    if isinstance(rng, np.random.Generator):
        return [rng] * n
    base = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    return [base.spawn(i).generator() for i in range(n)]


def jump_sizes(b: BoundaryTriple, eps: float, n: int, rng: RngLike,
               policy: StepPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``n`` independent jumps of ``eta`` (lifetimes of retained pieces)."""
    if b.J is None:
        return np.empty(0)
    gen = as_generator(rng)
    _, levels = _sampler(b.J, float(eps)).sample(n, gen)
    return np.array([clock(_piece(float(a), eps, gen, policy), b.m).total for a in levels])


@dataclass(frozen=True)
class LaplaceEstimate:
    xi: np.ndarray
    psi: np.ndarray
    stderr: np.ndarray
    n: int
    intensity: float


def laplace_exponent(b: BoundaryTriple, xi, eps: float, n: int, rng: RngLike,
                     policy: StepPolicy = DEFAULT_POLICY) -> LaplaceEstimate:
    """Monte Carlo ``Psi(xi) = r xi + int (1 - e^{-xi t}) nu(dt)``.

    The same jump sample is used for every ``xi``, so the estimate is
    concave and increasing in ``xi``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    I = intensity(b.J, eps)
    if I == 0 or n == 0:
        return LaplaceEstimate(xi, b.r * xi, np.zeros_like(xi), 0, I)
    zeta = jump_sizes(b, eps, n, rng, policy)
    f = -np.expm1(-np.outer(xi, zeta))
    psi = b.r * xi + I * f.mean(axis=1)
    se = I * f.std(axis=1, ddof=1) / np.sqrt(n)
    return LaplaceEstimate(xi, psi, se, n, I)


def marginal(b: BoundaryTriple, t: float, eps: float, gen: np.random.Generator,
             policy: StepPolicy = DEFAULT_POLICY, block: int = 64) -> float:
    """One draw of ``X(t)`` from zero, generating points in local-time order
    and stopping at the excursion that straddles ``t``.

    Gaps and marks are drawn ``block`` at a time.
    """
    if b.J is None:
        return 0.0
    samp = _sampler(b.J, float(eps))
    I, r = samp.total, b.r
    eta = 0.0
    while True:
        gaps = gen.exponential(1.0 / I, block)
        _, levels = samp.sample(block, gen)
        for ds, level in zip(gaps, levels):
            if r > 0 and eta + r * ds >= t:
                return 0.0
            eta += r * ds
            p = _piece(float(level), eps, gen, policy)
            A = clock(p, b.m)
            if eta + A.total > t:
                src = A.inverse(t - eta)
                return float(np.interp(src, p.times, p.values))
            eta += A.total


def sample_marginals(b: BoundaryTriple, t: float, eps: float, n: int, rng: RngLike,
                     policy: StepPolicy = DEFAULT_POLICY, check: bool = True) -> np.ndarray:
    """``n`` independent draws of ``X(t)``; with a stream or seed, replicate
    ``i`` uses child stream ``i``."""
    if check:
        _checked(b)
    return np.array([marginal(b, t, eps, g, policy) for g in _gens(rng, n)])
