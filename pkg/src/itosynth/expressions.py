"""Closed expression grammar for densities in model files (grammar version 1).

An expression is built from

* the variable ``x``,
* decimal numbers (``2``, ``0.5``, ``1e-3``),
* ``+ - * /`` and powers written ``^`` or ``**``,
* parentheses,
* the functions ``log``, ``exp`` and ``sqrt``.

Examples: ``2 + 1/x``, ``0.5*x^(-1.5)``, ``x^(-2)*log(1/x)^(-2)``.
Anything else is rejected before evaluation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (convert_xor, parse_expr,
                                        standard_transformations)

GRAMMAR_VERSION = 1

_X = sympy.Symbol("x", positive=True)
_FUNCS = {"log": sympy.log, "exp": sympy.exp, "sqrt": sympy.sqrt}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]+)|(\*\*|[-+*/^()]))")


class ExpressionError(ValueError):
    pass


def _check_tokens(text: str) -> None:
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        name = m.group(2)
        if name is not None and name != "x" and name not in _FUNCS:
            raise ExpressionError(f"unknown name {name!r}")
        pos = m.end()


@dataclass(frozen=True, eq=False)
class Expression:
    text: str
    expr: sympy.Expr
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.fn(x), dtype=float)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return out

    def antiderivative(self) -> "Expression | None":
        """Closed-form antiderivative, or None if sympy cannot find one."""
        try:
            F = sympy.integrate(self.expr, _X)
        except Exception:
            return None
        if F.has(sympy.Integral):
            return None
        F = sympy.simplify(F)
        out = Expression(f"antiderivative({self.text})", F, _lambdify(F))
        try:
            probe = out(np.array([0.3, 0.7]))
        except Exception:
            return None
        return out if np.all(np.isfinite(probe)) else None

    def limit_at_infinity(self) -> float | None:
        try:
            v = sympy.limit(self.expr, _X, sympy.oo)
        except Exception:
            return None
        if v.is_real and v.is_finite:
            return float(v)
        return None


def parse(text: str) -> Expression:
    """Parse ``text`` under the grammar above into a vectorised callable."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression")
    _check_tokens(text)
    try:
        expr = parse_expr(text.replace("^", "**"), local_dict={"x": _X, **_FUNCS},
                          global_dict={"Integer": sympy.Integer, "Float": sympy.Float,
                                       "Rational": sympy.Rational, "Symbol": sympy.Symbol},
                          transformations=standard_transformations + (convert_xor,))
    except Exception as exc:  # sympy raises a zoo of types
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
    expr = sympy.sympify(expr)
    if expr.free_symbols - {_X}:
        raise ExpressionError(f"only the variable x is allowed in {text!r}")
    return Expression(text, expr, _lambdify(expr))


def _lambdify(expr):
    return sympy.lambdify(_X, expr, ["scipy", "numpy"])
