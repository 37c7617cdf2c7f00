"""Scaling experiments and the statistics used to judge them.

* the exact scaling identity: ``(1/lam) X_b(u(lam) t)`` has the law of
  ``X_{b_lam}(t)`` for the rescaled triple ``b_lam``;
* convergence of rescaled marginals to the self-similar limit, tested by
  Kolmogorov-Smirnov at fixed times;
* tail index of the jumps of the inverse local time;
* a Skorokhod J1 distance between cadlag paths built by pinning matched
  features and interpolating linearly between them.

Truncated samples are compared at matched truncation: the native process at
``lam * eps`` against the rescaled one at ``eps``, which are equal in law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .excursion import DEFAULT_POLICY, StepPolicy
from .measures import (BoundaryTriple, RegimeError, ScalingRegime, canonical_m,
                       limit_triple, scale_triple)
from .rng import RngLike, RngStream
from .synthesis import sample_marginals, synthesize

ALPHA_LEVEL = 0.01


# ---------------------------------------------------------------------------
# J1 distance


@dataclass(frozen=True)
class CadlagPath:
    """Piecewise-linear cadlag path.  ``times`` is non-decreasing; a repeated
    time is a jump and the later entry is the value after it.  The path is
    held at its last value beyond the final time."""
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            raise ValueError("times and values must be equal-length 1-d arrays")
        if np.any(np.diff(t) < 0):
            raise ValueError("times must be non-decreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def step(cls, jump_times, levels, start: float = 0.0, T: float = 1.0) -> "CadlagPath":
        """Step path equal to ``start`` before ``jump_times[0]`` and to
        ``levels[k]`` from ``jump_times[k]`` on."""
        t, v = [0.0], [start]
        for s, x in zip(jump_times, levels):
            t += [s, s]
            v += [v[-1], x]
        t.append(max(T, t[-1]))
        v.append(v[-1])
        return cls(np.array(t), np.array(v))

    def right(self, q):
        """Right-continuous values at ``q``."""
        t, v = self.times, self.values
        q = np.asarray(q, dtype=float)
        i = np.searchsorted(t, q, side="right") - 1
        i = np.clip(i, 0, t.size - 1)
        j = np.minimum(i + 1, t.size - 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(t[j] > t[i], (q - t[i]) / (t[j] - t[i]), 0.0)
        out = v[i] + np.clip(w, 0.0, 1.0) * (v[j] - v[i])
        return np.where(q < t[0], v[0], out)

    def left(self, q):
        """Left limits at ``q``."""
        t, v = self.times, self.values
        q = np.asarray(q, dtype=float)
        i = np.searchsorted(t, q, side="left")
        i = np.clip(i, 1, t.size - 1) if t.size > 1 else np.zeros_like(i)
        h = np.maximum(i - 1, 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(t[i] > t[h], (q - t[h]) / (t[i] - t[h]), 1.0)
        out = v[h] + np.clip(w, 0.0, 1.0) * (v[i] - v[h])
        out = np.where(q <= t[0], v[0], out)
        return np.where(q > t[-1], v[-1], out)

    def features(self, floor: float) -> np.ndarray:
        """Times of jumps of size ``>= floor`` and the end points of zero-free
        stretches that reach ``floor``."""
        t, v = self.times, self.values
        same = np.flatnonzero((np.diff(t) == 0) & (np.abs(np.diff(v)) >= floor))
        feats = list(t[same])
        pos = v > 0
        k = 0
        n = v.size
        while k < n:
            if not pos[k]:
                k += 1
                continue
            a = k
            while k < n and pos[k]:
                k += 1
            if v[a:k].max() >= floor:
                feats.append(t[a - 1] if a > 0 else t[a])
                if k < n:
                    feats.append(t[k])
        return np.unique(np.asarray(feats, dtype=float))


@dataclass(frozen=True)
class J1Report:
    pins: tuple
    time_modulus: float
    value_modulus: float
    distance: float
    unmatched: int = 0

    def warp(self, t):
        """``Lambda(t)``: piecewise linear through the pins, slope 1 after
        the last one."""
        p1, p2 = np.array(self.pins).T
        t = np.asarray(t, dtype=float)
        return np.where(t <= p1[-1], np.interp(t, p1, p2), p2[-1] + (t - p1[-1]))


def _as_path(w) -> CadlagPath:
    if isinstance(w, CadlagPath):
        return w
    if hasattr(w, "arrays"):
        return CadlagPath(*w.arrays())
    return CadlagPath(*w)


def j1_distance(w1, w2, T: float, jump_floor: float) -> J1Report:
    """Skorokhod J1 distance estimate on ``[0, T]``.

    Features (jumps and excursion end points reaching ``jump_floor``) of the
    two paths are matched in order; pins that would break monotonicity are
    dropped.  ``Lambda`` maps time of ``w1`` to time of ``w2``.

    Parameters
    ----------
    w1, w2 : CadlagPath, SyntheticPath or (times, values)
    T : float
    jump_floor : float

    Returns
    -------
    J1Report
        ``time_modulus = sup |Lambda(t) - t|``,
        ``value_modulus = sup |w2(Lambda(t)) - w1(t)|`` over ``[0, T]`` and
        ``distance`` the larger of the two.
    """
    p1, p2 = _as_path(w1), _as_path(w2)
    f1 = p1.features(jump_floor)
    f2 = p2.features(jump_floor)
    f1, f2 = f1[f1 <= T], f2[f2 <= T]
    n = min(f1.size, f2.size)
    pins = [(0.0, 0.0)]
    for a, b in zip(f1[:n], f2[:n]):
        if a > pins[-1][0] and b > pins[-1][1]:
            pins.append((float(a), float(b)))
    rep = J1Report(tuple(pins), 0.0, 0.0, 0.0, abs(f1.size - f2.size))
    q1 = np.array([x for x, _ in pins] + [T])
    tmod = float(np.max(np.abs(rep.warp(q1) - q1)))
    # evaluate on w1 knots and preimages of w2 knots
    a2, b2 = np.array(pins).T
    k2 = p2.times
    pre = np.where(k2 <= b2[-1], np.interp(k2, b2, a2), a2[-1] + (k2 - b2[-1]))
    q = np.unique(np.concatenate([p1.times, pre, q1]))
    q = q[(q >= 0) & (q <= T)]
    lam = rep.warp(q)
    vmod = max(float(np.max(np.abs(p2.right(lam) - p1.right(q)))),
               float(np.max(np.abs(p2.left(lam) - p1.left(q)))))
    return J1Report(rep.pins, tmod, vmod, max(tmod, vmod), rep.unmatched)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


@dataclass(frozen=True)
class KSReport:
    stat: float
    pvalue: float
    n: int
    lam: float = float("nan")
    n_eff: float = float("nan")

    def passed(self, level: float = ALPHA_LEVEL) -> bool:
        return self.pvalue > level


def richardson_ks(x_eps, x_fine, cdf, lam: float = float("nan"),
                  eps: tuple = (1.0, 0.5)) -> KSReport:
    """One-sample KS against ``cdf`` for the extrapolated empirical CDF
    ``(e1 F_{e2} - e2 F_{e1}) / (e1 - e2)`` with ``eps = (e1, e2)``; for
    ``e2 = e1 / 2`` this is ``2 F_{e1/2} - F_{e1}``.

    Truncation bias is linear in ``eps``, so the combination removes it to
    first order.  Its variance is that of an empirical CDF with
    ``n_eff = 1 / (w2^2/n2 + w1^2/n1)`` samples, which sets the p-value.
    """
    e1, e2 = eps
    w2, w1 = e1 / (e1 - e2), -e2 / (e1 - e2)
    a = np.sort(np.asarray(x_eps, dtype=float))
    b = np.sort(np.asarray(x_fine, dtype=float))
    q = np.concatenate([a, b])
    F = cdf(q)
    D = 0.0
    for side in ("left", "right"):
        Fa = np.searchsorted(a, q, side=side) / a.size
        Fb = np.searchsorted(b, q, side=side) / b.size
        D = max(D, float(np.max(np.abs(w2 * Fb + w1 * Fa - F))))
    n_eff = 1.0 / (w2 ** 2 / b.size + w1 ** 2 / a.size)
    p = float(stats.kstwo.sf(D, int(round(n_eff))))
    return KSReport(D, p, int(a.size + b.size), lam, n_eff)


def two_sample_ks(x, y, lam: float = float("nan")) -> KSReport:
    res = stats.ks_2samp(x, y)
    n = len(x) * len(y) / (len(x) + len(y))
    return KSReport(float(res.statistic), float(res.pvalue), int(len(x) + len(y)), lam, n)


def reflecting_bessel_cdf(alpha: float, t: float = 1.0):
    """CDF of ``X(t)`` for the diffusion with speed measure ``m^(alpha)``
    reflected at 0 and started there (``alpha < 1``).

    ``Y = 2 alpha X^(1/alpha)`` is a squared Bessel process of dimension
    ``2 - 2 alpha``, so ``Y(t) / t`` is chi-square with that many degrees of
    freedom.  For ``alpha = 1/2`` this is ``|N(0, t)|``.
    """
    if not 0 < alpha < 1:
        raise RegimeError("the reflecting limit needs 0 < alpha < 1")
    k = 2.0 - 2.0 * alpha

    def cdf(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        y = 2.0 * alpha * x ** (1.0 / alpha) / t
        return special.gammainc(k / 2.0, y / 2.0)
    return cdf


def reflecting_bessel_sample(alpha: float, t: float, n: int, gen: np.random.Generator):
    """Exact draws of ``X(t)`` for the reflecting limit process."""
    y = t * gen.chisquare(2.0 - 2.0 * alpha, n)
    return (y / (2.0 * alpha)) ** alpha


# ---------------------------------------------------------------------------
# scaling


def scaled_marginals(b: BoundaryTriple, reg: ScalingRegime, lam: float, t: float, eps: float,
                     n: int, rng: RngLike, route: str = "scaled",
                     policy: StepPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Draws of ``(1/lam) X_b(u(lam) t)`` truncated at ``eps`` in rescaled units.

    ``route='native'`` simulates ``b`` at truncation ``lam * eps`` and
    rescales; ``route='scaled'`` simulates the rescaled triple at ``eps``.
    """
    if route == "native":
        u = float(reg.u(lam))
        return sample_marginals(b, u * t, lam * eps, n, rng, policy) / lam
    if route == "scaled":
        return sample_marginals(scale_triple(b, reg, lam), t, eps, n, rng, policy)
    raise ValueError("route must be 'native' or 'scaled'")


def scaling_identity_check(b: BoundaryTriple, reg: ScalingRegime, lam: float, t: float, N: int,
                           rng: RngLike, eps: float = 0.1,
                           policy: StepPolicy = DEFAULT_POLICY) -> KSReport:
    """Two-sample KS between the native and the rescaled construction.

    The two are equal in law, so a small p-value points at a bug, not at an
    approximation.
    """
    base = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    x = scaled_marginals(b, reg, lam, t, eps, N, base.spawn(0), "native", policy)
    y = scaled_marginals(b, reg, lam, t, eps, N, base.spawn(1), "scaled", policy)
    return two_sample_ks(x, y, lam)


@dataclass(frozen=True)
class ExperimentSpec:
    """One convergence experiment.

    ``eps`` is a ladder; the first two rungs feed the extrapolated KS in the
    convergent case, the smallest is used in the divergent case.
    """
    model: BoundaryTriple
    regime: ScalingRegime
    lambdas: tuple
    t_star: float = 1.0
    N: int = 2000
    eps: tuple = (0.1, 0.05)
    seed: int = 0
    outdir: str | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise ValueError("lambda ladder must be positive and increasing")
        if self.N < 100:
            raise ValueError("N must be at least 100")
        if not self.eps or min(self.eps) <= 0:
            raise ValueError("eps ladder must be positive")


@dataclass(frozen=True)
class VerifyReport:
    kind: str
    rows: tuple  # KSReport per lambda
    trend: bool
    passed: bool
    level: float
    notes: tuple = ()
    j1: tuple = ()  # diagnostic J1 distances, largest lambda against the limit

    def results_rows(self):
        return [(r.lam, r.stat, r.pvalue, r.n) for r in self.rows]


def verify_convergent(spec: ExperimentSpec) -> VerifyReport:
    """Rescaled marginals at ``t_star`` against the exact marginal of the
    reflecting limit.

    Pass when the largest ``lambda`` has ``p > 0.01 / len(lambdas)``.
    """
    reg = spec.regime
    if reg.kind != "convergent":
        raise RegimeError("verify_convergent needs a convergent regime")
    limit_triple(spec.model, reg)  # guards: non-trivial, d(J) finite
    cdf = reflecting_bessel_cdf(reg.alpha, spec.t_star)
    eps = sorted(spec.eps, reverse=True)
    base = RngStream(spec.seed)
    rows = []
    for i, lam in enumerate(spec.lambdas):
        s = base.spawn(i)
        x1 = scaled_marginals(spec.model, reg, lam, spec.t_star, eps[0], spec.N, s.spawn(0))
        if len(eps) > 1:
            x2 = scaled_marginals(spec.model, reg, lam, spec.t_star, eps[1], spec.N, s.spawn(1))
            rows.append(richardson_ks(x1, x2, cdf, lam, (eps[0], eps[1])))
        else:
            res = stats.kstest(x1, cdf)
            rows.append(KSReport(float(res.statistic), float(res.pvalue), spec.N, lam, spec.N))
    level = ALPHA_LEVEL / len(rows)
    trend = rows[-1].stat < rows[0].stat
    return VerifyReport("convergent", tuple(rows), trend, rows[-1].pvalue > level, level)


def j1_diagnostic(b: BoundaryTriple, lim: BoundaryTriple, T: float, eps: float, n: int,
                  rng: RngLike) -> tuple:
    """J1 distances on ``[0, T]`` between ``n`` independent pairs of paths
    of ``b`` and ``lim``, with jump floor ``eps``.

    The pairs are not coupled, so the distances do not shrink to 0; they are
    a descriptive diagnostic, not a test.
    """
    base = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    out = []
    for i in range(n):
        w1, _ = synthesize(b, T, eps, base.spawn(2 * i))
        w2, _ = synthesize(lim, T, eps, base.spawn(2 * i + 1))
        out.append(j1_distance(w1, w2, T, eps).distance)
    return tuple(out)


def verify_divergent(spec: ExperimentSpec, diagnostic_paths: int = 5) -> VerifyReport:
    """Rescaled marginals at ``t_star`` against simulated marginals of the
    limit ``(m^(alpha), J^(beta), 0)`` at the same truncation.

    Pass when the KS distance at the largest ``lambda`` is below the one at
    the smallest.  ``diagnostic_paths`` pairs of paths at the largest
    ``lambda`` feed :func:`j1_diagnostic`.
    """
    reg = spec.regime
    if reg.kind != "divergent":
        raise RegimeError("verify_divergent needs a divergent regime")
    lim = limit_triple(spec.model, reg)
    eps = min(spec.eps)
    base = RngStream(spec.seed)
    ref = sample_marginals(lim, spec.t_star, eps, spec.N, base.spawn(0))
    rows = []
    for i, lam in enumerate(spec.lambdas):
        x = scaled_marginals(spec.model, reg, lam, spec.t_star, eps, spec.N, base.spawn(i + 1))
        rows.append(two_sample_ks(x, ref, lam))
    trend = rows[-1].stat < rows[0].stat
    j1 = ()
    notes = ()
    if diagnostic_paths > 0:
        scaled = scale_triple(spec.model, reg, spec.lambdas[-1])
        j1 = j1_diagnostic(scaled, lim, spec.t_star, eps, diagnostic_paths,
                           base.spawn(len(spec.lambdas) + 1))
        notes = (f"median J1 distance at lambda={spec.lambdas[-1]:g}: {np.median(j1):.4g}",)
    return VerifyReport("divergent", tuple(rows), trend, trend, ALPHA_LEVEL / len(rows),
                        notes, j1)


def self_similarity_check(alpha: float, J, lam: float, t: float, N: int, rng: RngLike,
                          eps: float = 0.1) -> KSReport:
    """``lam^-alpha X(lam t)`` against ``X(t)`` for a self-similar limit
    triple ``(m^(alpha), J, 0)``, truncated at matching levels."""
    b = BoundaryTriple(canonical_m(alpha), J, 0.0)
    base = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    k = lam ** alpha
    x = sample_marginals(b, lam * t, k * eps, N, base.spawn(0)) / k
    y = sample_marginals(b, t, eps, N, base.spawn(1))
    return two_sample_ks(x, y, lam)


# ---------------------------------------------------------------------------
# tail index


@dataclass(frozen=True)
class TailFit:
    index: float
    stderr: float
    r2: float
    curvature: float
    n_used: int
    power_law: bool


class TailSpanError(ValueError):
    """Too few jumps for a two-decade tail fit."""


R2_MIN = 0.99
CURVATURE_MAX = 0.25


def _survival_fit(x: np.ndarray, lo: float, hi: float):
    n = x.size
    surv = np.arange(1, n + 1) / n  # P(X >= x_(k)) for x sorted descending
    sel = (surv >= lo) & (surv <= hi)
    return np.log(x[sel]), np.log(surv[sel]), surv[sel]


def stable_index(jumps, decades: tuple = (1e-3, 1e-1), n_boot: int = 200) -> TailFit:
    """Tail index from a log-log regression of the empirical survival
    function over the survival range ``decades``.

    ``stderr`` is a bootstrap standard error (fixed internal seed; the
    regression's own standard error ignores the dependence between order
    statistics).  ``curvature`` is the relative difference of the slopes
    fitted on the two halves of the range; a power law has it near 0.
    ``power_law`` requires ``r2 >= 0.99`` and ``curvature <= 0.25``.
    """
    x = np.sort(np.asarray(jumps, dtype=float))[::-1]
    x = x[x > 0]
    n = x.size
    lo, hi = decades
    if n * lo < 1 or n < 1000:
        raise TailSpanError(f"{n} jumps cannot resolve survival down to {lo:g}")
    lx, ls, sv = _survival_fit(x, lo, hi)
    fit = stats.linregress(lx, ls)
    upper = sv >= math.sqrt(lo * hi)
    s_hi = stats.linregress(lx[upper], ls[upper]).slope
    s_lo = stats.linregress(lx[~upper], ls[~upper]).slope
    gen = np.random.default_rng(0)
    boot = []
    for _ in range(n_boot):
        xb = np.sort(gen.choice(x, n))[::-1]
        bx, bs, _ = _survival_fit(xb, lo, hi)
        boot.append(-stats.linregress(bx, bs).slope)
    index = -float(fit.slope)
    curv = abs(s_hi - s_lo) / max(abs(fit.slope), 1e-300)
    r2 = float(fit.rvalue ** 2)
    return TailFit(index, float(np.std(boot, ddof=1)), r2, float(curv), int(lx.size),
                   bool(r2 >= R2_MIN and curv <= CURVATURE_MAX))
