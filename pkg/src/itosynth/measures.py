"""Boundary data ``(m, j, c, r)``, jump functions ``J`` and their scaling.

``m`` is the speed measure of a diffusion in natural scale on the half-line,
``j`` the jumping-in measure, ``c`` the reflection (sticky-free push-off)
coefficient and ``r`` the delay per unit boundary local time.  The pair
``(j, c)`` is encoded by the single non-decreasing function

    J(z) = inf{x > 0 : c + int_(0,x] y j(dy) > z},

whose right-continuous inverse is ``J^{-1}(x) = c + int_(0,x] y j(dy)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from . import expressions
from ._improper import improper


class ModelError(ValueError):
    """Invalid or unsupported model data."""


class RegimeError(ValueError):
    """Scaling regime not applicable to the given triple."""


def _vec(f):
    """Wrap a scalar function so it maps arrays elementwise."""
    def g(x):
        x = np.asarray(x, dtype=float)
        out = np.array([f(float(v)) for v in x.ravel()], dtype=float)
        return out.reshape(x.shape) if x.ndim else float(out[0])
    return g


def _tabulated_antiderivative(density, lo=1e-14, hi=1e14, n=16385):
    """``F(x) = int_1^x density`` from a log-grid table, for densities without
    a closed-form antiderivative."""
    u = np.linspace(np.log(lo), np.log(hi), n)
    x = np.exp(u)
    with np.errstate(all="ignore"):
        g = np.asarray(density(x), dtype=float) * x
    g = np.where(np.isfinite(g), g, 0.0)
    F = integrate.cumulative_trapezoid(g, u, initial=0.0)
    F -= np.interp(0.0, u, F)

    def anti(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            ly = np.log(np.maximum(y, 0.0))
        return np.interp(ly, u, F, left=-np.inf if F[0] < -1e12 else F[0], right=F[-1])
    return anti


# ---------------------------------------------------------------------------
# speed measure


@dataclass(frozen=True, eq=False)
class SpeedMeasure:
    """Speed measure ``m`` on ``(0, inf)``: a density plus finitely many atoms.

    ``antiderivative`` is any ``F`` with ``F' = density``; ``m(x)`` is
    ``F(x)`` plus the atom masses at or below ``x``.  ``at_infinity`` is
    ``lim F(x)`` when finite.
    """
    density: Callable
    antiderivative: Callable
    atoms: tuple = ()
    alpha: float | None = None
    label: str = ""
    at_infinity: float | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.antiderivative(x), dtype=float)
        for a, w in self.atoms:
            out = out + w * (x >= a)
        return out

    def mass(self, lo, hi, open_right: bool = False):
        """``m((lo, hi])``, or ``m((lo, hi))`` with ``open_right``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.asarray(self.antiderivative(hi) - self.antiderivative(lo), dtype=float)
        for a, w in self.atoms:
            inside = (a > lo) & ((a < hi) if open_right else (a <= hi))
            out = out + w * inside
        return out

    def validate(self, probe=None) -> None:
        """Check positivity on a probe grid and that the origin is an exit
        boundary, ``int_(0,1] x dm(x) < inf``."""
        probe = np.geomspace(1e-6, 1e6, 241) if probe is None else np.asarray(probe)
        dens = np.asarray(self.density(probe), dtype=float)
        if np.any(~np.isfinite(dens)) or np.any(dens < 0):
            raise ModelError(f"speed density of {self.label!r} must be finite and non-negative")
        if np.any(dens == 0) and not self.atoms:
            raise ModelError(f"speed measure {self.label!r} is not strictly increasing")
        exit_ = improper(lambda x: x * self.density(x), 1.0)
        if not exit_.finite:
            raise ModelError(f"origin is not an exit boundary for {self.label!r}: "
                             "int_(0,1] x dm(x) diverges")

    def lower_limit_infinite(self) -> bool:
        """Whether ``m(0+) = -inf``, i.e. ``int_(0,1] dm`` diverges."""
        return not improper(self.density, 1.0).finite


def canonical_m(alpha: float) -> SpeedMeasure:
    """Self-similar speed measure ``m^(alpha)``.

    ``m(x) = x^(1/a - 1)/(1 - a)`` for ``a < 1``, ``log x`` for ``a = 1`` and
    ``-x^(1/a - 1)/(a - 1)`` for ``a > 1``; the density is
    ``x^(1/a - 2) / a`` in every case.
    """
    a = float(alpha)
    if not a > 0:
        raise ModelError("alpha must be positive")
    q = 1.0 / a - 1.0

    def density(x):
        return np.asarray(x, dtype=float) ** (q - 1.0) / a

    if a < 1:
        anti, at_inf = (lambda x: np.asarray(x, dtype=float) ** q / (1.0 - a)), None
    elif a == 1:
        def anti(x):
            with np.errstate(divide="ignore"):
                return np.log(np.asarray(x, dtype=float))
        at_inf = None
    else:
        def anti(x):
            with np.errstate(divide="ignore"):
                return -np.asarray(x, dtype=float) ** q / (a - 1.0)
        at_inf = 0.0
    return SpeedMeasure(density, anti, (), a, f"m^({a:g})", at_inf)


def speed_measure(density, atoms=(), antiderivative=None, label: str | None = None,
                  validate: bool = True) -> SpeedMeasure:
    """Speed measure from a density (grammar string or callable) and atoms."""
    at_inf = None
    if isinstance(density, str):
        ex = expressions.parse(density)
        label = label or density
        F = ex.antiderivative() if antiderivative is None else None
        if F is not None:
            antiderivative = F
            at_inf = F.limit_at_infinity()
        density = ex
    if antiderivative is None:
        antiderivative = _tabulated_antiderivative(density)
    atoms = tuple((float(a), float(w)) for a, w in atoms)
    if any(a <= 0 or w <= 0 for a, w in atoms):
        raise ModelError("atoms need positive location and mass")
    m = SpeedMeasure(density, antiderivative, atoms, None, label or "m", at_inf)
    if validate:
        m.validate()
    return m


# ---------------------------------------------------------------------------
# jump measure


@dataclass(frozen=True, eq=False)
class JumpMeasure:
    """Jumping-in measure ``j`` on ``(0, inf)``: density on ``support`` plus atoms.

    ``tail(x) = j((x, inf))`` and ``moment(x) = int_(0,x] y j(dy)`` use the
    closed forms when given and quadrature otherwise.
    """
    density: Callable | None = None
    atoms: tuple = ()
    support: tuple = (0.0, math.inf)
    tail_fn: Callable | None = field(default=None, repr=False)
    moment_fn: Callable | None = field(default=None, repr=False)
    label: str = ""

    @property
    def is_zero(self) -> bool:
        return self.density is None and not self.atoms and self.tail_fn is None

    def _dens(self, x):
        lo, hi = self.support
        x = np.asarray(x, dtype=float)
        inside = (x > lo) & (x < hi)
        with np.errstate(all="ignore"):
            d = np.asarray(self.density(np.where(inside, x, 1.0)), dtype=float)
        return np.where(inside, d, 0.0)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        if self.tail_fn is not None:
            return np.asarray(self.tail_fn(x), dtype=float)
        out = np.zeros_like(x) if x.ndim else np.float64(0.0)
        if self.density is not None:
            out = out + self._tabled(x, 1)
        for a, w in self.atoms:
            out = out + w * (a > x)
        return out

    @cached_property
    def _tables(self):
        """Log-grid tables of the density part of ``moment`` and ``tail``."""
        lo, hi = self.support
        a, b = max(lo, 1e-12), min(hi, 1e12)
        u = np.linspace(np.log(a), np.log(b), 16385)
        x = np.exp(u)
        with np.errstate(all="ignore"):
            d = np.asarray(self.density(x), dtype=float) * x
        d[~np.isfinite(d)] = 0.0
        mom = self._moment_density(a) + integrate.cumulative_trapezoid(d * x, u, initial=0.0)
        cum = integrate.cumulative_trapezoid(d, u, initial=0.0)
        tail = self._tail_density(b) + cum[-1] - cum
        return u, mom, tail

    def _tabled(self, x, which):
        u, mom, tail = self._tables
        table = (mom, tail)[which]
        lo, hi = self.support
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(x, 0.0))
        # inside the support the table ends coincide with the support ends
        lx = np.clip(lx, u[0] if lo >= 1e-12 else -np.inf, u[-1] if hi <= 1e12 else np.inf)
        out = np.asarray(np.interp(lx, u, table), dtype=float)
        # beyond the table, continue log-log linearly (power-law ends)
        for end, nxt, side in ((0, 1, lx < u[0]), (-1, -2, lx > u[-1])):
            if not np.any(side):
                continue
            y0, y1 = table[end], table[nxt]
            if y0 > 0 and y1 > 0:
                slope = (np.log(y1) - np.log(y0)) / (u[nxt] - u[end])
                with np.errstate(all="ignore"):
                    ext = y0 * np.exp(slope * (lx - u[end]))
            else:
                ext = np.full(np.shape(lx), y0)
            out = np.where(side, ext, out)
        return out

    def _tail_density(self, x):
        lo, hi = self.support
        a = max(x, lo)
        if a >= hi:
            return 0.0
        if math.isinf(hi):
            val = improper(lambda y: self._dens(y), max(a, 1e-300), "infinity")
            return val.value
        return integrate.quad(lambda y: float(self._dens(y)), a, hi, limit=200)[0]

    def moment(self, x):
        x = np.asarray(x, dtype=float)
        if self.moment_fn is not None:
            return np.asarray(self.moment_fn(x), dtype=float)
        out = np.zeros_like(x) if x.ndim else np.float64(0.0)
        if self.density is not None:
            out = out + self._tabled(x, 0)
        for a, w in self.atoms:
            out = out + a * w * (a <= x)
        return out

    def _moment_density(self, x):
        lo, hi = self.support
        b = min(x, hi)
        if b <= lo:
            return 0.0
        if math.isinf(b):
            near = improper(lambda y: y * self._dens(y), 1.0)
            far = improper(lambda y: y * self._dens(y), 1.0, "infinity")
            return near.value + far.value
        return improper(lambda y: y * self._dens(y), b).value

    def total_moment(self) -> float:
        return float(self.moment(np.inf))

    def mass_below(self, x: float) -> float:
        """``j((0, x))``."""
        val = 0.0
        if self.density is not None:
            val += improper(lambda y: self._dens(y), x).value
        val += sum(w for a, w in self.atoms if a < x)
        return val


ZERO_J = JumpMeasure(label="0")


def canonical_j(beta: float) -> JumpMeasure:
    """Stable jumping-in measure ``j^(beta)(dx) = beta x^(-beta-1) dx``."""
    b = float(beta)
    if not b > 0:
        raise ModelError("beta must be positive")

    def moment(x):
        x = np.asarray(x, dtype=float)
        if b < 1:
            return b * x ** (1.0 - b) / (1.0 - b)
        return np.where(x > 0, np.inf, 0.0)

    return JumpMeasure(lambda x: b * np.asarray(x, dtype=float) ** (-b - 1.0), (),
                       (0.0, math.inf), lambda x: np.asarray(x, dtype=float) ** (-b),
                       moment, f"j^({b:g})")


def jump_measure(density=None, atoms=(), support=(0.0, math.inf), label=None) -> JumpMeasure:
    """Jump measure from a density (grammar string or callable) and atoms.

    Closed-form tail and moment functions are derived when the density is a
    grammar string and sympy can integrate it over the whole support.
    """
    atoms = tuple((float(a), float(w)) for a, w in atoms)
    if any(a <= 0 or w < 0 for a, w in atoms):
        raise ModelError("jump atoms need positive location and non-negative mass")
    lo, hi = float(support[0]), float(support[1])
    if not 0 <= lo < hi:
        raise ModelError("jump density support must satisfy 0 <= lo < hi")
    tail_fn = moment_fn = None
    if isinstance(density, str):
        label = label or density
        density = expressions.parse(density)
        if lo == 0 and math.isinf(hi) and not atoms:
            tail_fn, moment_fn = _closed_tail_moment(density.expr)
    return JumpMeasure(density, atoms, (lo, hi), tail_fn, moment_fn, label or "j")


def _closed_tail_moment(expr):
    import sympy
    x = sympy.Symbol("x", positive=True)
    y = sympy.Symbol("y", positive=True)
    try:
        f = expr.subs(x, y)
        tail = sympy.integrate(f, (y, x, sympy.oo))
        mom = sympy.integrate(y * f, (y, 0, x))
    except Exception:
        return None, None
    if tail.has(sympy.Integral) or mom.has(sympy.Integral) or tail.has(sympy.Piecewise) \
            or mom.has(sympy.Piecewise):
        return None, None
    return (sympy.lambdify(x, tail, ["scipy", "numpy"]),
            sympy.lambdify(x, mom, ["scipy", "numpy"]))


# ---------------------------------------------------------------------------
# jump functions


@dataclass(frozen=True, eq=False)
class JumpFunction:
    """Right-continuous non-decreasing ``J: (0, inf) -> [0, inf]``.

    ``inverse(x) = inf{z : J(z) > x}``; ``c = inf{z : J(z) > 0}`` and
    ``d = sup{z : J(z) < inf}`` are cached.  ``measure`` is the associated
    ``j`` when it is known in closed form.
    """
    fn: Callable
    inverse: Callable
    c: float
    d: float
    measure: JumpMeasure | None = None
    label: str = ""

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))

    def level_tail(self, x):
        """``int_(x,inf) dJ^{-1}(y) / y``, which equals ``j((x, inf))``."""
        if self.measure is not None:
            return self.measure.tail(x)
        return _vec(self._level_tail1)(x)

    def _level_tail1(self, x: float) -> float:
        if x <= 0:
            return math.inf
        F = self.inverse
        Fx = float(F(x))
        # int_(x,inf) dF(y)/y = (1/x) int_0^inf (F(x e^s) - F(x)) e^-s ds; dyadic
        # shells in s keep a step of F far above x from slipping between nodes
        def f(s):
            return (float(F(x * math.exp(s))) - Fx) * math.exp(-s)

        val = 0.0
        for a, b in [(0.0, 1.0)] + [(2.0 ** k, 2.0 ** (k + 1)) for k in range(10)]:
            val += integrate.quad(f, a, min(b, 700.0), limit=200, epsabs=1e-16, epsrel=1e-11)[0]
            if b >= 700.0:
                break
        return val / x


# search range for monotone root finding; values below _XMIN count as 0
_XMIN, _XMAX = 1e-100, 1e100


def _bisect_increasing(g, target, lo, hi, iters=90):
    """Smallest ``x`` in ``[lo, hi]`` (log scale) with ``g(x) > target``."""
    lo = np.full(np.shape(target), float(lo))
    hi = np.full(np.shape(target), float(hi))
    for _ in range(iters):
        mid = np.sqrt(lo * hi)
        up = np.asarray(g(mid)) > target
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return hi


def step_J(c: float) -> JumpFunction:
    """``V_(0,c)``: 0 on ``(0, c)`` and ``inf`` on ``[c, inf)`` (pure reflection)."""
    c = float(c)
    if not c > 0:
        raise ModelError("V_(0,c) needs c > 0")

    def fn(z):
        return np.where(np.asarray(z) < c, 0.0, np.inf)

    def inverse(x):
        return np.full(np.shape(x), c) if np.ndim(x) else c

    return JumpFunction(fn, inverse, c, c, ZERO_J, f"V(0,{c:g})")


def power_J(beta: float) -> JumpFunction:
    """``J^(beta)(z) = ((1 - beta)/beta * z)^(1/(1 - beta))``, the jump
    function of ``j^(beta)`` with ``c = 0``."""
    b = float(beta)
    if not 0 < b < 1:
        raise ModelError("J^(beta) needs 0 < beta < 1")
    k = (1.0 - b) / b

    def fn(z):
        return (k * np.asarray(z, dtype=float)) ** (1.0 / (1.0 - b))

    def inverse(x):
        return np.asarray(x, dtype=float) ** (1.0 - b) / k

    return JumpFunction(fn, inverse, 0.0, math.inf, canonical_j(b), f"J^({b:g})")


def j_c_to_J(j: JumpMeasure, c: float) -> JumpFunction:
    """Jump function of the pair ``(j, c)``.

    ``J(z)`` is found by monotone bisection (log scale) on the cumulative
    ``G(x) = c + int_(0,x] y j(dy)``; ``G`` itself is the inverse.
    """
    c = float(c)
    if c < 0:
        raise ModelError("c must be non-negative")
    if j.is_zero:
        if c == 0:
            raise ModelError("j = 0 and c = 0 give the trivial process; no jump function")
        return step_J(c)
    m1 = float(j.moment(1.0))
    if not np.isfinite(m1):
        raise ModelError("int_(0,1] x j(dx) diverges")
    d = c + j.total_moment()

    def G(x):
        x = np.asarray(x, dtype=float)
        return c + np.where(x > 0, j.moment(np.maximum(x, 1e-300)), 0.0)

    def fn(z):
        z = np.asarray(z, dtype=float)
        out = np.empty(z.shape)
        zero = z < c
        inf = z >= d
        mid = ~(zero | inf)
        out[zero] = 0.0
        out[inf] = np.inf
        if np.any(mid):
            out[mid] = _bisect_increasing(G, z[mid], _XMIN, _XMAX)
        return out

    return JumpFunction(fn, G, c, d, j, f"J[{j.label}, c={c:g}]")


def J_to_j_c(J: JumpFunction) -> tuple:
    """Recover ``(j, c)`` from ``J`` via ``j(dx) = dJ^{-1}(x) / x``.

    The returned measure evaluates ``j((x, inf))`` by quadrature of the
    Stieltjes integral and ``int_(0,x] y j(dy) = J^{-1}(x) - c`` directly.
    """
    probe = np.geomspace(1e-6, 1e6, 121)
    vals = J(probe)
    with np.errstate(invalid="ignore"):
        bad = np.any(np.diff(vals) < 0)
    if bad:
        raise ModelError("J must be non-decreasing")
    c = float(J.c)
    if J.d == J.c:
        return ZERO_J, c
    helper = JumpFunction(J.fn, J.inverse, J.c, J.d, None, J.label)

    def moment(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.isinf(x), J.d - c, np.asarray(J.inverse(x), dtype=float) - c)

    return JumpMeasure(None, (), (0.0, math.inf), helper.level_tail, moment,
                       f"j[{J.label}]"), c


def jump_function(fn: Callable, label: str = "J") -> JumpFunction:
    """Wrap a user ``J`` (vectorised callable), computing ``c``, ``d`` and the
    inverse numerically."""
    probe = np.geomspace(1e-8, 1e8, 321)
    vals = np.asarray(fn(probe), dtype=float)
    with np.errstate(invalid="ignore"):
        bad = np.any(np.diff(vals) < 0)
    if bad:
        raise ModelError("J must be non-decreasing")
    fin = np.isfinite(vals)

    def inverse(x):
        x = np.asarray(x, dtype=float)
        return _bisect_increasing(fn, x, _XMIN, _XMAX)

    c = 0.0 if vals[0] > 0 else float(_bisect_increasing(fn, 0.0, _XMIN, _XMAX))
    if c <= 2 * _XMIN:
        c = 0.0
    if fin[-1]:
        d = math.inf
    else:
        d = float(_bisect_increasing(lambda z: np.isinf(fn(z)).astype(float), 0.5, _XMIN, _XMAX))
    return JumpFunction(fn, inverse, c, d, None, label)


# ---------------------------------------------------------------------------
# triples and scaling


@dataclass(frozen=True, eq=False)
class BoundaryTriple:
    m: SpeedMeasure
    J: JumpFunction | None
    r: float = 0.0

    def __post_init__(self):
        if self.r < 0 or not np.isfinite(self.r):
            raise ModelError("r must be finite and non-negative")

    @property
    def trivial(self) -> bool:
        return self.J is None

    @property
    def c(self) -> float:
        return 0.0 if self.J is None else self.J.c

    @property
    def d(self) -> float:
        return 0.0 if self.J is None else self.J.d

    @property
    def j(self) -> JumpMeasure:
        if self.J is None:
            return ZERO_J
        if self.J.measure is not None:
            return self.J.measure
        return J_to_j_c(self.J)[0]


def triple(m: SpeedMeasure, j: JumpMeasure = ZERO_J, c: float = 0.0, r: float = 0.0) -> BoundaryTriple:
    """Build ``(m, J, r)`` from boundary data ``(m, j, c, r)``."""
    J = None if (j.is_zero and c == 0) else j_c_to_J(j, c)
    return BoundaryTriple(m, J, float(r))


def _slow(k, p):
    return lambda x: k * np.log(math.e + np.asarray(x, dtype=float)) ** p


@dataclass(frozen=True)
class ScalingRegime:
    """Regular-variation data for the scaling limit.

    ``K(x) = k (log(e + x))^p`` and ``L(x) = l_k (log(e + x))^l_p``;
    ``u(lam) = lam^(1/alpha) K(lam)``; ``v(lam) = lam`` in the convergent case
    and ``lam^beta / L(lam)`` in the divergent case.
    """
    alpha: float
    kind: str = "convergent"
    k: float = 1.0
    p: float = 0.0
    beta: float | None = None
    l_k: float = 1.0
    l_p: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise RegimeError("alpha must be positive")
        if self.kind not in ("convergent", "divergent"):
            raise RegimeError("kind must be 'convergent' or 'divergent'")
        if self.k <= 0 or self.l_k <= 0:
            raise RegimeError("K and L must be positive")
        if self.kind == "divergent":
            if self.beta is None or not 0 < self.beta < min(1.0, 1.0 / self.alpha):
                raise RegimeError("divergent regime needs 0 < beta < min(1, 1/alpha)")

    def K(self, x):
        return _slow(self.k, self.p)(x)

    def L(self, x):
        return _slow(self.l_k, self.l_p)(x)

    def u(self, lam):
        return lam ** (1.0 / self.alpha) * self.K(lam)

    def v(self, lam):
        if self.kind == "convergent":
            return lam
        return lam ** self.beta / self.L(lam)


def scale_speed(m: SpeedMeasure, reg: ScalingRegime, lam: float) -> SpeedMeasure:
    """``dm_lam(x) = dm(lam x) / (lam^(1/alpha - 1) K(lam))`` with the
    normalisation of ``m_lam(x)`` matching the three canonical branches."""
    a = reg.alpha
    norm = float(lam ** (1.0 / a - 1.0) * reg.K(lam))
    F = m.antiderivative
    if a < 1:
        shift = 0.0
    elif a == 1:
        shift = float(F(lam))
    else:
        if m.at_infinity is None:
            raise RegimeError("alpha > 1 needs m(inf) finite and known")
        shift = m.at_infinity

    def density(x):
        return lam * np.asarray(m.density(lam * np.asarray(x, dtype=float))) / norm

    def anti(x):
        return (np.asarray(F(lam * np.asarray(x, dtype=float))) - shift) / norm

    at_inf = None if m.at_infinity is None else (m.at_infinity - shift) / norm
    atoms = tuple((a_ / lam, w / norm) for a_, w in m.atoms)
    return SpeedMeasure(density, anti, atoms, m.alpha, f"{m.label}@{lam:g}", at_inf)


def scale_jump(J: JumpFunction, reg: ScalingRegime, lam: float) -> JumpFunction:
    """``J_lam(z) = J(lam z / v(lam)) / lam``."""
    v = float(reg.v(lam))

    def fn(z):
        return J(lam * np.asarray(z, dtype=float) / v) / lam

    def inverse(x):
        return v / lam * np.asarray(J.inverse(lam * np.asarray(x, dtype=float)))

    meas = None
    if J.measure is not None:
        j = J.measure
        dens = None if j.density is None else (lambda x: v * lam * np.asarray(j._dens(lam * np.asarray(x))))
        meas = JumpMeasure(dens, tuple((a / lam, v * w) for a, w in j.atoms), (0.0, math.inf),
                           lambda x: v * np.asarray(j.tail(lam * np.asarray(x, dtype=float))),
                           lambda x: v / lam * np.asarray(j.moment(lam * np.asarray(x, dtype=float))),
                           f"{j.label}@{lam:g}")
    return JumpFunction(fn, inverse, J.c * v / lam, J.d * v / lam, meas, f"{J.label}@{lam:g}")


def scale_triple(b: BoundaryTriple, reg: ScalingRegime, lam: float) -> BoundaryTriple:
    """The rescaled triple ``(m_lam, J_lam, r_lam)`` with ``r_lam = v r / u``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    J = None if b.J is None else scale_jump(b.J, reg, lam)
    return BoundaryTriple(scale_speed(b.m, reg, lam), J, float(reg.v(lam) * b.r / reg.u(lam)))


def limit_triple(b: BoundaryTriple, reg: ScalingRegime) -> BoundaryTriple:
    """Scaling limit: ``(m^(alpha), V_(0,d(J)), 0)`` when ``d(J) < inf``
    (convergent) or ``(m^(alpha), J^(beta), 0)`` when ``j`` has a regularly
    varying tail of index ``beta`` (divergent)."""
    if b.trivial:
        raise RegimeError("trivial triple (j = 0, c = 0): the process is identically 0")
    if reg.kind == "convergent":
        if not np.isfinite(b.d):
            raise RegimeError("convergent regime needs d(J) = c + int y j(dy) < inf")
        return BoundaryTriple(canonical_m(reg.alpha), step_J(b.d), 0.0)
    if not _certify_tail(b, reg):
        raise RegimeError(f"j((x,inf)) ~ x^-{reg.beta} L(x) could not be certified")
    return BoundaryTriple(canonical_m(reg.alpha), power_J(reg.beta), 0.0)


def _certify_tail(b: BoundaryTriple, reg: ScalingRegime, tol: float = 0.1) -> bool:
    if np.isfinite(b.d):
        return False
    xs = np.array([1e4, 1e6, 1e8])
    ratio = np.asarray(b.J.level_tail(xs), dtype=float) * xs ** reg.beta / reg.L(xs)
    return bool(np.all(np.abs(ratio - 1.0) < tol))
