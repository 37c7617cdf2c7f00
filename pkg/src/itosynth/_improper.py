"""Finite-or-infinite verdicts for improper integrals of non-negative functions.

The integral of ``f`` over ``(0, base]`` (or ``[base, inf)``) is computed in
the logarithmic variable ``u = |log(x / base)|`` over dyadic shells
``[0, 1], [1, 2], [2, 4], ..., [128, 256]`` with Gauss-Legendre nodes.
The verdict is

* divergent if any shell overflows or the running total exceeds ``1e8``,
* otherwise decided by the ratio of the last two shell contributions:
  a power-law integrable singularity makes the shells collapse, a
  logarithmic divergence keeps them constant or growing.

Ratios between 0.6 and 0.95 are reported with ``confident=False``; they are
the numerically undecidable near-boundary cases such as ``1/(x log(1/x)^1.1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THRESHOLD = 1e8
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(64)
_SHELLS = [(0.0, 1.0)] + [(2.0 ** k, 2.0 ** (k + 1)) for k in range(8)]


@dataclass(frozen=True)
class ImproperIntegral:
    value: float
    finite: bool
    confident: bool
    ratio: float
    shells: tuple

    def __bool__(self):
        return self.finite


def _shell(g, a, b):
    u = 0.5 * (b - a) * _NODES + 0.5 * (b + a)
    with np.errstate(all="ignore"):
        vals = g(u)
    return 0.5 * (b - a) * float(np.dot(_WEIGHTS, vals))


def improper(f, base: float = 1.0, toward: str = "zero") -> ImproperIntegral:
    """Integral of ``f >= 0`` over ``(0, base]`` (``toward='zero'``) or
    ``[base, inf)`` (``toward='infinity'``)."""
    sign = -1.0 if toward == "zero" else 1.0
    if toward not in ("zero", "infinity"):
        raise ValueError("toward must be 'zero' or 'infinity'")

    def g(u):
        x = base * np.exp(sign * u)
        return np.abs(np.asarray(f(x), dtype=float)) * x

    return shell_verdict([_shell(g, a, b) for a, b in _SHELLS])


def shell_bounds():
    return list(_SHELLS)


def shell_verdict(shells) -> ImproperIntegral:
    """Verdict from per-shell contributions ordered toward the singularity."""
    total = 0.0
    for i, s in enumerate(shells):
        if not np.isfinite(s):
            return ImproperIntegral(np.inf, False, True, np.inf, tuple(shells))
        total += s
        if total > THRESHOLD:
            return ImproperIntegral(np.inf, False, True, np.inf, tuple(shells))
    prev, last = shells[-2], shells[-1]
    if last <= 1e-14 * max(total, 1e-300) or last == 0.0:
        return ImproperIntegral(total, True, True, 0.0, tuple(shells))
    ratio = last / prev if prev > 0 else np.inf
    finite = ratio < 0.75
    confident = ratio <= 0.6 or ratio >= 0.95
    if finite:
        total += last * ratio / (1.0 - ratio)  # geometric tail beyond the last shell
    return ImproperIntegral(total if finite else np.inf, finite, confident, ratio, tuple(shells))
