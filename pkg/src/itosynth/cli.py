"""Command line interface.

Exit codes: 0 pass, 2 statistical failure, 1 usage or model error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .excursion import SamplingError, StepPolicy, sample_excursion_above
from .expressions import ExpressionError
from .limits import (ALPHA_LEVEL, TailSpanError, scaling_identity_check, stable_index,
                     verify_convergent, verify_divergent)
from .measures import ModelError, RegimeError
from .modelfile import FORMAT_VERSION, load_experiment, load_model
from .rng import RngStream
from .synthesis import HorizonError, jump_sizes, laplace_exponent, synthesize
from .time_change import ClockError

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _write_manifest(outdir: Path, payload: dict) -> None:
    doc = {"format_version": FORMAT_VERSION, "itosynth_version": __version__}
    doc.update(payload)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) if not isinstance(x, (int, np.integer)) else str(x)
                              for x in row) + "\n")


def _outdir(p) -> Path:
    d = Path(p)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _policy(args) -> StepPolicy:
    return StepPolicy(dt=args.dt)


# ---------------------------------------------------------------------------


def cmd_sample_excursion(args) -> int:
    out = _outdir(args.out)
    base = RngStream(args.seed)
    names = []
    for i in range(args.count):
        e = sample_excursion_above(args.eps, base.spawn(i), _policy(args))
        name = f"excursion_{i:04d}.csv"
        e.to_csv(out / name)
        names.append(name)
    _write_manifest(out, {"command": "sample-excursion", "seed": args.seed, "eps": args.eps,
                          "dt": args.dt, "count": args.count, "outputs": names})
    return EXIT_PASS


def cmd_synthesize(args) -> int:
    model = load_model(args.model)
    out = _outdir(args.out)
    sp, pp = synthesize(model.triple, args.T, args.eps, RngStream(args.seed), S=args.S,
                        policy=_policy(args))
    sp.to_csv(out / "path.csv")
    sp.eta_to_csv(out / "eta.csv")
    _write_manifest(out, {"command": "synthesize", "seed": args.seed, "eps": args.eps,
                          "S": pp.horizon, "T": args.T, "dt": args.dt,
                          "model": str(args.model), "model_hash": model.hash,
                          "points": len(pp), "intensity": pp.intensity,
                          "intensity_half_eps": sp.metadata["intensity_half_eps"],
                          "outputs": ["path.csv", "eta.csv"]})
    print(f"{len(pp)} excursions, local-time horizon {pp.horizon:g}, eta(S) = {sp.eta.end:.6g}")
    return EXIT_PASS


def cmd_laplace(args) -> int:
    model = load_model(args.model)
    est = laplace_exponent(model.triple, args.xi, args.eps, args.N, RngStream(args.seed),
                           _policy(args))
    rows = list(zip(est.xi, est.psi, est.stderr))
    if args.out:
        out = _outdir(args.out)
        _write_rows(out / "laplace.csv", ("xi", "psi", "stderr"), rows)
        _write_manifest(out, {"command": "laplace", "seed": args.seed, "eps": args.eps,
                              "N": args.N, "model": str(args.model), "model_hash": model.hash,
                              "outputs": ["laplace.csv"]})
    for xi, psi, se in rows:
        print(f"xi={xi:g} psi={psi:.6g} se={se:.2g}")
    return EXIT_PASS


def _results(out: Path, rows, payload: dict) -> None:
    _write_rows(out / "results.csv", ("lambda", "stat", "pvalue", "n"), rows)
    payload["outputs"] = ["results.csv"]
    _write_manifest(out, payload)


def cmd_verify(args) -> int:
    spec, model = load_experiment(args.spec)
    if spec.regime.kind != args.kind:
        raise RegimeError(f"regime mismatch: command {args.kind!r}, model {spec.regime.kind!r}")
    rep = (verify_convergent if args.kind == "convergent" else verify_divergent)(spec)
    out = _outdir(args.out or spec.outdir or ".")
    _results(out, rep.results_rows(),
             {"command": f"verify {args.kind}", "seed": spec.seed, "eps": list(spec.eps),
              "lambdas": list(spec.lambdas), "t_star": spec.t_star, "N": spec.N,
              "model_hash": model.hash, "trend": rep.trend, "passed": rep.passed,
              "level": rep.level, "j1_diagnostic": list(rep.j1), "notes": list(rep.notes)})
    for r in rep.rows:
        print(f"lambda={r.lam:g} ks={r.stat:.4f} p={r.pvalue:.4g}")
    for note in rep.notes:
        print(note)
    print(f"trend={'yes' if rep.trend else 'no'} {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_identity(args) -> int:
    model = load_model(args.model)
    if model.regime is None:
        raise ModelError("identity-check needs a [regime] table in the model")
    base = RngStream(args.seed)
    rows = [scaling_identity_check(model.triple, model.regime, lam, args.t, args.N,
                                   base.spawn(i), args.eps, _policy(args))
            for i, lam in enumerate(args.lam)]
    level = ALPHA_LEVEL / len(rows)
    ok = all(r.pvalue > level for r in rows)
    out = _outdir(args.out)
    _results(out, [(r.lam, r.stat, r.pvalue, r.n) for r in rows],
             {"command": "identity-check", "seed": args.seed, "eps": args.eps, "t": args.t,
              "N": args.N, "model_hash": model.hash, "level": level, "passed": ok})
    for r in rows:
        print(f"lambda={r.lam:g} ks={r.stat:.4f} p={r.pvalue:.4g}")
    print("PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_stable_index(args) -> int:
    if args.jumps:
        jumps = np.loadtxt(args.jumps, delimiter=",", ndmin=1)
    else:
        if not args.model:
            raise UsageError("stable-index needs --jumps or --model")
        model = load_model(args.model)
        jumps = jump_sizes(model.triple, args.eps, args.n, RngStream(args.seed), _policy(args))
    fit = stable_index(jumps)
    print(f"index={fit.index:.4f} se={fit.stderr:.4f} r2={fit.r2:.4f} "
          f"curvature={fit.curvature:.3f} power_law={fit.power_law}")
    ok = fit.power_law
    if args.expect is not None:
        ok = ok and abs(fit.index - args.expect) <= args.tol
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def _common(p, seed=True):
    if seed:
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1e-4, help="smallest time step")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="itosynth", description="Excursion synthesis of half-line Markov processes.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample-excursion", help="excursions under n(. | M > eps)")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default=".")
    _common(p)
    p.set_defaults(func=cmd_sample_excursion)

    p = sub.add_parser("synthesize", help="sample a path and its inverse local time")
    p.add_argument("--model", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--S", type=float, default=1.0, help="initial local-time horizon")
    p.add_argument("--out", default=".")
    _common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("laplace", help="Monte Carlo Laplace exponent of eta")
    p.add_argument("--model", required=True)
    p.add_argument("--xi", type=float, nargs="+", default=[1.0])
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--N", type=int, default=20000)
    p.add_argument("--out")
    _common(p)
    p.set_defaults(func=cmd_laplace)

    p = sub.add_parser("verify", help="convergence of rescaled marginals")
    p.add_argument("kind", choices=("convergent", "divergent"))
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("identity-check", help="native versus rescaled construction")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[4.0, 16.0])
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--N", type=int, default=500)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out", default=".")
    _common(p)
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("stable-index", help="tail index of eta jumps")
    p.add_argument("--jumps", help="file with one jump per line")
    p.add_argument("--model")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--expect", type=float)
    p.add_argument("--tol", type=float, default=0.05)
    _common(p)
    p.set_defaults(func=cmd_stable_index)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"itosynth: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ModelError, RegimeError, ExpressionError, ClockError, HorizonError,
            SamplingError, TailSpanError, ValueError, OSError) as exc:
        print(f"itosynth: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
