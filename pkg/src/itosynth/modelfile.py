"""TOML model and experiment files (format version 1).

Model file::

    version = 1

    [m]                       # speed measure
    kind = "density"          # "canonical" (needs alpha) or "density"
    density = "2 + 1/x"       # expression grammar of itosynth.expressions
    atoms = [[1.0, 0.5]]      # optional (location, mass) pairs

    [j]                       # jumping-in measure
    kind = "canonical"        # "zero", "canonical" (needs beta) or "density"
    beta = 0.5
    # density = "x^-2"; support = [0.0, 1.0]; atoms = [[2.0, 0.5]]

    [boundary]
    c = 0.0
    r = 0.0

    [regime]                  # optional, needed by scaling commands
    kind = "divergent"        # or "convergent"
    alpha = 0.5
    beta = 0.5                # divergent only
    k = 1.0                   # K(x) = k log(e + x)^p
    p = 0.0
    l_k = 1.0                 # L(x) = l_k log(e + x)^l_p
    l_p = 0.0

Experiment file::

    version = 1
    model = "logspeed.toml"       # relative to the experiment file
    regime = "divergent"      # must match the model's [regime] kind
    lambdas = [4, 16, 64]
    t_star = 1.0
    N = 1000
    eps = [0.1]
    seed = 7
    output = "out"            # optional, relative to the experiment file
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .limits import ExperimentSpec
from .measures import (BoundaryTriple, ModelError, ScalingRegime, ZERO_J, canonical_j,
                       canonical_m, jump_measure, power_J, speed_measure, triple)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Model:
    triple: BoundaryTriple
    regime: ScalingRegime | None
    hash: str
    source: dict


def model_hash(data: dict) -> str:
    """SHA-256 of the parsed model, independent of layout and comments."""
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _version(data: dict, what: str) -> None:
    v = data.get("version")
    if v != FORMAT_VERSION:
        raise ModelError(f"{what}: unsupported version {v!r} (expected {FORMAT_VERSION})")


def _atoms(table: dict):
    atoms = table.get("atoms", [])
    try:
        return tuple((float(a), float(w)) for a, w in atoms)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"atoms must be [location, mass] pairs: {atoms!r}") from exc


def _keys(t: dict, name: str, allowed: set) -> None:
    extra = set(t) - allowed
    if extra:
        raise ModelError(f"[{name}] unknown keys {sorted(extra)}")


def _speed(t: dict):
    _keys(t, "m", {"kind", "alpha", "density", "atoms"})
    kind = t.get("kind", "canonical")
    if kind == "canonical":
        if "alpha" not in t:
            raise ModelError("[m] kind = 'canonical' needs alpha")
        if t.get("atoms"):
            raise ModelError("canonical m takes no atoms")
        return canonical_m(float(t["alpha"]))
    if kind == "density":
        if "density" not in t:
            raise ModelError("[m] kind = 'density' needs a density expression")
        return speed_measure(str(t["density"]), _atoms(t))
    raise ModelError(f"[m] unknown kind {kind!r}")


def _jump(t: dict):
    _keys(t, "j", {"kind", "beta", "density", "atoms", "support"})
    kind = t.get("kind", "zero")
    if kind == "zero":
        return ZERO_J
    if kind == "canonical":
        if "beta" not in t:
            raise ModelError("[j] kind = 'canonical' needs beta")
        return canonical_j(float(t["beta"]))
    if kind == "density":
        support = tuple(float(x) for x in t.get("support", (0.0, math.inf)))
        dens = t.get("density")
        return jump_measure(None if dens is None else str(dens), _atoms(t), support)
    raise ModelError(f"[j] unknown kind {kind!r}")


def _regime(t: dict | None):
    if t is None:
        return None
    _keys(t, "regime", {"kind", "alpha", "beta", "k", "p", "l_k", "l_p"})
    if "alpha" not in t:
        raise ModelError("[regime] needs alpha")
    return ScalingRegime(**{k: (v if k == "kind" else float(v)) for k, v in t.items()})


def build_model(data: dict) -> Model:
    _version(data, "model")
    m = _speed(data.get("m", {"kind": "canonical", "alpha": 0.5}))
    jt = data.get("j", {"kind": "zero"})
    bt = data.get("boundary", {})
    _keys(bt, "boundary", {"c", "r"})
    j = _jump(jt)
    c, r = float(bt.get("c", 0.0)), float(bt.get("r", 0.0))
    if c < 0 or r < 0:
        raise ModelError("c and r must be non-negative")
    if jt.get("kind") == "canonical" and c == 0:
        # closed form J(z) = ((1-beta)/beta z)^(1/(1-beta))
        b = BoundaryTriple(m, power_J(float(jt["beta"])), r)
    else:
        b = triple(m, j, c, r)
    return Model(b, _regime(data.get("regime")), model_hash(data), data)


def _read(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ModelError(f"no such file: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ModelError(f"{path}: {exc}") from exc


def load_model(path) -> Model:
    return build_model(_read(path))


def load_experiment(path) -> tuple:
    """Return ``(ExperimentSpec, Model)`` from an experiment file."""
    path = Path(path)
    data = _read(path)
    _version(data, "experiment")
    if "model" not in data:
        raise ModelError("experiment needs a model path")
    model = load_model(path.parent / data["model"])
    kind = data.get("regime")
    if model.regime is None:
        raise ModelError("the model has no [regime] table")
    if kind is not None and kind != model.regime.kind:
        raise ModelError(f"regime mismatch: experiment {kind!r}, model {model.regime.kind!r}")
    out = data.get("output")
    spec = ExperimentSpec(
        model.triple, model.regime,
        tuple(float(x) for x in data.get("lambdas", ())),
        float(data.get("t_star", 1.0)), int(data.get("N", 2000)),
        tuple(float(x) for x in data.get("eps", (0.1, 0.05))), int(data.get("seed", 0)),
        None if out is None else str(path.parent / out),
        {"model_hash": model.hash, "model_path": str(data["model"])})
    return spec, model
