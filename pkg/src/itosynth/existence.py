"""Existence test for the Feller process with boundary data ``(m, j, c, r)``.

The process exists exactly when

* ``j((1, inf)) + int_(0,1) j(dx) int_0^x m((y, 1)) dy < inf``        (C)
* ``c = 0`` whenever ``m(0+) = -inf``
* ``r > 0`` or ``j((0, 1)) = inf`` whenever ``c = 0``                  (C+)

The inner integral is rewritten by Fubini as
``G(x) = int_(0,x] z dm(z) + x m((x, 1))`` and all integrals near 0 are
evaluated on the logarithmic grid ``x = exp(-u)``, ``0 <= u <= 256``, with the
dyadic-shell divergence test of :mod:`itosynth._improper`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from ._improper import ImproperIntegral, improper, shell_bounds, shell_verdict
from .measures import BoundaryTriple, JumpMeasure, SpeedMeasure

EXISTS, FAILS_C, FAILS_CPLUS = "exists", "fails_C", "fails_Cplus"

_U_MAX = 256.0
_N_U = 16385


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Raw boundary data ``(m, j, c, r)``.

    Unlike :class:`BoundaryTriple` it needs no jump function, so it can
    describe pairs for which ``int x j(dx)`` diverges and ``J`` is undefined.
    """
    m: SpeedMeasure
    j: JumpMeasure
    c: float = 0.0
    r: float = 0.0

    @property
    def trivial(self) -> bool:
        return self.j.is_zero and self.c == 0


@dataclass(frozen=True)
class ExistenceReport:
    verdict: str
    confident: bool
    tail_mass: float
    c_integral: ImproperIntegral | None
    m_lower_infinite: bool
    j_near_zero_infinite: bool
    notes: tuple = field(default=())

    @property
    def exists(self) -> bool:
        return self.verdict == EXISTS


def _inner_G(m: SpeedMeasure, u: np.ndarray) -> np.ndarray:
    """``G(x) = int_(0,x] z dm(z) + x m((x, 1))`` at ``x = exp(-u)``."""
    x = np.exp(-u)
    with np.errstate(all="ignore"):
        md = np.asarray(m.density(x), dtype=float) * x  # dm per du
    md = np.where(np.isfinite(md), md, 0.0)
    # m((x, 1)) accumulates from u = 0 upward
    m_above = integrate.cumulative_trapezoid(md, u, initial=0.0)
    # int_(0,x] z dm accumulates from the far end (u = U_MAX) down
    zm = md * x
    # integral over u' in [u, U_MAX], i.e. z in (x_min, x]
    part = integrate.cumulative_trapezoid(zm[::-1], -u[::-1], initial=0.0)[::-1]
    G = part + x * m_above
    for a, w in m.atoms:
        if a < 1.0:
            G = G + np.where(a <= x, a * w, x * w)
    return G


def _stieltjes_shells(j: JumpMeasure, G_of_u) -> list:
    """Per-shell contributions of ``int G dj`` over ``(0, 1)``."""
    out = []
    for a, b in shell_bounds():
        uu = np.linspace(a, b, 257)
        tails = np.asarray(j.tail(np.exp(-uu)), dtype=float)
        dmass = np.diff(tails)
        if np.any(~np.isfinite(tails)):
            out.append(np.inf)
            continue
        mid = 0.5 * (uu[1:] + uu[:-1])
        out.append(float(np.sum(G_of_u(mid) * np.clip(dmass, 0.0, None))))
    return out


def condition_C(m: SpeedMeasure, j: JumpMeasure) -> tuple:
    """``(tail, inner)`` where ``tail = j((1, inf))`` and ``inner`` is the
    verdict on ``int_(0,1) G(x) j(dx)``."""
    tail = float(j.tail(1.0))
    if j.is_zero:
        return tail, ImproperIntegral(0.0, True, True, 0.0, ())
    u = np.linspace(0.0, _U_MAX, _N_U)
    G = _inner_G(m, u)

    def G_of_u(uu):
        return np.interp(uu, u, G)

    if j.density is not None and j.tail_fn is None:
        near = improper(lambda x: G_of_u(-np.log(x)) * j._dens(x), 1.0)
        extra = sum(w * G_of_u(-np.log(a)) for a, w in j.atoms if a < 1.0)
        inner = ImproperIntegral(near.value + extra, near.finite, near.confident,
                                 near.ratio, near.shells)
    else:
        inner = shell_verdict(_stieltjes_shells(j, G_of_u))
    return tail, inner


def j_mass_near_zero(j: JumpMeasure) -> ImproperIntegral:
    """Verdict on ``j((0, 1))``."""
    if j.is_zero:
        return ImproperIntegral(0.0, True, True, 0.0, ())
    shells = []
    for a, b in shell_bounds():
        ta, tb = np.asarray(j.tail(np.exp(-np.array([a, b]))), dtype=float)
        shells.append(tb - ta)
    return shell_verdict(shells)


def condition_M(m: SpeedMeasure) -> ImproperIntegral:
    """Verdict on ``int_(0+) x log log(1/x) dm(x)`` (near 0, below ``1/e^e``)."""
    base = np.exp(-np.e)
    return improper(lambda x: x * np.log(np.log(1.0 / x)) * m.density(x), base)


def check_existence(b: BoundaryTriple | BoundaryData) -> ExistenceReport:
    """Decide whether the process with boundary data ``b`` exists.

    Returns
    -------
    ExistenceReport
        ``verdict`` is ``"exists"``, ``"fails_C"`` or ``"fails_Cplus"``;
        ``confident`` is False when a divergence test fell in its ambiguous
        band.
    """
    notes = []
    m = b.m
    j = b.j
    m_inf = m.lower_limit_infinite()
    tail, inner = condition_C(m, j)
    jm0 = j_mass_near_zero(j)
    confident = inner.confident and jm0.confident
    if not np.isfinite(tail):
        notes.append("j((1, inf)) diverges")
    if not inner.finite:
        notes.append("int_(0,1) j(dx) int_0^x m((y,1)) dy diverges")
    if not np.isfinite(tail) or not inner.finite:
        return ExistenceReport(FAILS_C, confident, tail, inner, m_inf, not jm0.finite, tuple(notes))
    if m_inf and b.c > 0:
        notes.append("m(0+) = -inf requires c = 0")
        return ExistenceReport(FAILS_C, confident, tail, inner, m_inf, not jm0.finite, tuple(notes))
    if b.c == 0 and b.r == 0 and jm0.finite:
        notes.append("c = 0 needs r > 0 or j((0,1)) = inf")
        return ExistenceReport(FAILS_CPLUS, confident, tail, inner, m_inf, False, tuple(notes))
    if b.trivial:
        notes.append("j = 0 and c = 0: the process stays at 0")
    return ExistenceReport(EXISTS, confident, tail, inner, m_inf, not jm0.finite, tuple(notes))
