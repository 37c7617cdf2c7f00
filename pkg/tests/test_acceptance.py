"""Exit criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line.  Run alone with
``pytest -m acceptance -v``.
"""
import time

import numpy as np
import pytest
from scipy import stats

from itosynth import (BoundaryData, BoundaryTriple, ExperimentSpec, RngStream, ScalingRegime,
                      canonical_j, canonical_m, check_existence, estimate_local_time,
                      jump_measure, laplace_exponent, occupation_residual, power_J,
                      sample_absorbed_bm, sample_excursion_above, sample_Qmx,
                      scaling_identity_check, speed_measure, stable_index, step_J,
                      time_change_excursion, triple, verify_convergent, verify_divergent)
from itosynth.cli import main
from itosynth.excursion import StepPolicy
from itosynth.local_time import occupation_time
from itosynth.synthesis import jump_sizes

pytestmark = pytest.mark.acceptance

M_HALF = canonical_m(0.5)
M_LOG = speed_measure("2 + 1/x")
REFLECTING = triple(M_HALF, jump_measure(atoms=[(1.0, 1.0)]), 0.0, 1.0)
REFLECTING_REG = ScalingRegime(0.5)
LOG_MODEL = BoundaryTriple(M_LOG, power_J(0.5), 0.0)
LOG_REG = ScalingRegime(0.5, "divergent", beta=0.5)


@pytest.fixture
def report(capsys):
    t0 = time.perf_counter()

    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail} "
                  f"[{time.perf_counter() - t0:.0f}s]", flush=True)
        assert ok, detail
    return emit


def test_c01_excursion_max_law(report):
    eps, N = 0.1, 100_000
    gen = RngStream(101).generator()
    M = np.array([sample_excursion_above(eps, gen).height for _ in range(N)])
    parts, ok = [], True
    for x in (0.2, 0.5, 1.0):
        p = eps / x
        z = (np.mean(M > x) - p) / np.sqrt(p * (1 - p) / N)
        ok &= abs(z) <= 3.0
        parts.append(f"x={x:g} z={z:+.2f}")
    report(1, ok, "; ".join(parts))


def _residuals(seeds, k: int):
    out = []
    dt, dx = 1e-4 / k, 1e-3 / k
    for s in seeds:
        e = sample_excursion_above(0.1, RngStream(int(s)), StepPolicy(dt=dt))
        f = estimate_local_time(e, dx=dx, times=[e.lifetime])
        for a, b in [(0.1, 0.3), (0.05, 0.2), (0.0503, 0.0817), (0.0217, 0.1333)]:
            if occupation_time(e, a, b) >= 10 * dt:
                out.append(occupation_residual(e, f, a, b))
    return np.array(out)


def test_c02_occupation_formula(report):
    seeds = np.random.default_rng(102).integers(2 ** 31, size=100)
    r1, r2 = _residuals(seeds, 1), _residuals(seeds, 2)
    m1, m2 = float(np.median(r1)), float(np.median(r2))
    ok = m1 <= 0.05 and m2 <= 0.05 and m2 <= m1 + 1e-9
    report(2, ok, f"median residual {m1:.2e} (dt, dx) and {m2:.2e} (halved), "
                  f"{r1.size} bands")


def test_c03_canonical_fixed_point(report):
    gen = RngStream(103).generator()
    worst = 0.0
    ratio = 0.0
    for _ in range(100):
        e = sample_excursion_above(0.1, gen)
        dx = estimate_local_time(e).dx
        em = time_change_excursion(e, M_HALF, dx=dx)
        gap = float(np.max(np.abs(np.interp(e.times, em.times, em.values) - e.values)))
        worst = max(worst, gap)
        ratio = max(ratio, gap / (10 * dx))
    report(3, ratio <= 1.0, f"sup |e_m - e| = {worst:.2e}, at most {ratio:.2e} of 10*dx")


def test_c04_identity_qmx(report):
    N = 5000
    g1, g2 = RngStream(104, 0).generator(), RngStream(104, 1).generator()
    a = np.array([sample_Qmx(M_HALF, 1.0, g1).lifetime for _ in range(N)])
    b = np.array([sample_absorbed_bm(1.0, g2).lifetime for _ in range(N)])
    res = stats.ks_2samp(a, b)
    report(4, res.pvalue > 0.01, f"KS={res.statistic:.4f} p={res.pvalue:.3f} N={N}")


def test_c05_scaling_identity(report):
    level = 0.01 / 2
    lines, ok = [], True
    for name, b, reg in [("reflecting", REFLECTING, REFLECTING_REG), ("log-speed", LOG_MODEL, LOG_REG)]:
        passes = 0
        for seed in range(10):
            base = RngStream(105, seed)
            ps = [scaling_identity_check(b, reg, lam, 1.0, 500, base.spawn(i)).pvalue
                  for i, lam in enumerate((4.0, 16.0))]
            passes += all(p > level for p in ps)
        ok &= passes >= 9
        lines.append(f"{name} {passes}/10 seeds")
    report(5, ok, "; ".join(lines))


@pytest.mark.parametrize("name, J, index", [("c=1", step_J(1.0), 0.5),
                                            ("j^(1/2)", power_J(0.5), 0.25)])
def test_c06_stable_indices(report, name, J, index):
    b = BoundaryTriple(M_HALF, J, 0.0)
    jumps = jump_sizes(b, 0.1, 40_000, RngStream(106))
    fit = stable_index(jumps)
    ok = fit.power_law and abs(fit.index - index) <= 0.05
    report(6, ok, f"{name}: index {fit.index:.4f} (target {index}) se={fit.stderr:.4f} "
                  f"r2={fit.r2:.4f} n={jumps.size}")


def test_c07_convergent_desk_scale(report):
    spec = ExperimentSpec(REFLECTING, REFLECTING_REG, (100.0,), 1.0, 2000, (0.1, 0.05), 107)
    rep = verify_convergent(spec)
    r = rep.rows[-1]
    report(7, r.pvalue > 0.01, f"lambda=100 KS={r.stat:.4f} p={r.pvalue:.3f} "
                               f"n_eff={r.n_eff:.0f}")


def test_c08_divergent_desk_scale(report):
    wins, stats_ = 0, []
    for seed in range(10):
        spec = ExperimentSpec(LOG_MODEL, LOG_REG, (4.0, 16.0, 64.0), 1.0, 1000, (0.1,), 1080 + seed)
        rep = verify_divergent(spec)
        wins += rep.trend
        stats_.append(f"{rep.rows[0].stat:.3f}>{rep.rows[-1].stat:.3f}" if rep.trend
                      else f"{rep.rows[0].stat:.3f}<={rep.rows[-1].stat:.3f}")
    report(8, wins >= 8, f"KS(64) < KS(4) in {wins}/10 seeds ({', '.join(stats_)})")


def test_c09_laplace_exponent(report):
    b = BoundaryTriple(M_HALF, step_J(1.0), 0.0)
    e1 = laplace_exponent(b, 1.0, 0.1, 100_000, RngStream(109, 0))
    e2 = laplace_exponent(b, 1.0, 0.05, 300_000, RngStream(109, 1))
    psi = float(2 * e2.psi[0] - e1.psi[0])
    se = float(np.hypot(2 * e2.stderr[0], e1.stderr[0]))
    rel = abs(psi / np.sqrt(2) - 1)
    drift = laplace_exponent(BoundaryTriple(M_HALF, None, 1.5), [0.5, 1.0, 4.0], 0.1, 10, 0)
    exact = bool(np.array_equal(drift.psi, 1.5 * np.array([0.5, 1.0, 4.0])))
    report(9, rel <= 0.05 and exact,
           f"Psi(1) = {psi:.4f} +- {se:.4f} vs sqrt(2) (rel {rel:.3f}; eps 0.1: "
           f"{e1.psi[0]:.4f}, eps 0.05: {e2.psi[0]:.4f}); drift-only exact: {exact}")


def test_c10_existence_checker(report):
    bad = []
    for alpha in (0.4, 0.8, 1.5):
        for k in (0.5, 0.9, 1.1):
            beta = k / alpha
            expected = beta < 1 / alpha
            got = check_existence(BoundaryData(canonical_m(alpha), canonical_j(beta))).exists
            if got != expected:
                bad.append(f"(alpha={alpha}, beta={beta:.4g}) expected "
                           f"{'exists' if expected else 'fails'}, got "
                           f"{'exists' if got else 'fails'}")
    # m with dm = (2x+1)/x dx: c must be 0 and int x log(1/x) j(dx) < inf
    cases = [(canonical_j(0.5), 0.0, True),
             (canonical_j(0.5), 1.0, False),
             (jump_measure("x^-2*log(1/x)^-2", support=(0.0, 0.5)), 0.0, False)]
    for j, c, expected in cases:
        got = check_existence(BoundaryData(M_LOG, j, c)).exists
        if got != expected:
            bad.append(f"log-speed j={j.label} c={c} expected {expected}, got {got}")
    report(10, not bad, "all 12 verdicts match" if not bad else f"{len(bad)} mismatches: "
                        + "; ".join(bad))


def test_c11_determinism(report, tmp_path):
    model = tmp_path / "model.toml"
    model.write_text('version = 1\n[m]\nkind = "density"\ndensity = "2 + 1/x"\n'
                     '[j]\nkind = "canonical"\nbeta = 0.5\n')
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["synthesize", "--model", str(model), "--T", "2", "--eps", "0.05",
                     "--seed", "111", "--out", str(out)]) == 0
        assert main(["sample-excursion", "--eps", "0.1", "--count", "5", "--seed", "111",
                     "--out", str(out / "exc")]) == 0
        runs.append(out)
    files = sorted(p.relative_to(runs[0]) for p in runs[0].rglob("*.csv"))
    same = all((runs[0] / f).read_bytes() == (runs[1] / f).read_bytes() for f in files)
    report(11, same and len(files) == 7, f"{len(files)} CSV files byte-identical: {same}")
