import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from itosynth import (BoundaryTriple, HorizonError, ModelError, RngStream, boundary_local_time,
                      build_eta, build_path, canonical_m, intensity, jump_measure,
                      laplace_exponent, power_J, sample_marginals, sample_point_process,
                      sample_Qmx, speed_measure, step_J, synthesize, triple)
from itosynth.synthesis import MarkSampler, Staircase, jump_sizes, normalization_constant

M_HALF = canonical_m(0.5)
REFLECT = BoundaryTriple(M_HALF, step_J(1.0), 0.0)
STABLE = BoundaryTriple(M_HALF, power_J(0.5), 0.0)
DRIFT = BoundaryTriple(M_HALF, None, 2.0)


# oracles: I(eps) = c/eps for V_(0,c); 2/sqrt(eps) for J(z) = z^2
@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_intensity_step(eps):
    assert intensity(step_J(1.0), eps) == pytest.approx(1.0 / eps, rel=1e-12)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_intensity_power(eps):
    assert intensity(power_J(0.5), eps) == pytest.approx(2.0 / np.sqrt(eps), rel=1e-4)


def test_intensity_none():
    assert intensity(None, 0.1) == 0.0


def test_mark_sampler_split(gen):
    # for J(z) = z^2 half the intensity sits below z = sqrt(eps)
    eps, n = 0.1, 40_000
    s = MarkSampler(power_J(0.5), eps)
    z, level = s.sample(n, gen)
    frac = np.mean(z <= np.sqrt(eps))
    assert abs(frac - 0.5) < 4 * np.sqrt(0.25 / n)
    np.testing.assert_allclose(level, z ** 2, rtol=1e-6)
    # survival of the level above eps: P(J > x) = (1/sqrt(x)) / I
    x = 1.0
    assert np.mean(level > x) == pytest.approx((1 / np.sqrt(x)) / s.total, abs=0.01)


def test_poisson_count():
    pp = sample_point_process(REFLECT, 200.0, 1.0, RngStream(5))
    assert pp.intensity == pytest.approx(1.0)
    assert abs(len(pp) - 200) < 4 * np.sqrt(200)
    assert np.all(np.diff(pp.s) >= 0) and pp.s.max() <= 200.0


def test_pieces_exceed_truncation():
    pp = sample_point_process(STABLE, 3.0, 0.1, RngStream(2))
    assert len(pp) > 0
    for level, piece in zip(pp.levels, pp.pieces):
        assert piece.start == pytest.approx(level)
        assert piece.height > max(level, 0.1)
        assert piece.values[-1] == 0.0


def test_nonexistent_triple_rejected():
    # c = 0, r = 0 and j((0,1)) finite fails (C+)
    b = triple(M_HALF, jump_measure(atoms=[(1.0, 1.0)]), 0.0, 0.0)
    with pytest.raises(ModelError):
        sample_point_process(b, 1.0, 0.1, 0)


def test_drift_only_eta():
    sp, pp = synthesize(DRIFT, 1.0, 0.1, 3)
    assert len(pp) == 0
    s = np.linspace(0, pp.horizon, 11)
    np.testing.assert_allclose(sp.eta(s), 2.0 * s)
    L = boundary_local_time(sp)
    np.testing.assert_allclose(L(np.array([0.3, 1.0])), [0.15, 0.5])
    np.testing.assert_array_equal(sp(np.linspace(0, 1, 5)), 0.0)


@given(st.lists(st.floats(0.01, 5.0), min_size=0, max_size=8),
       st.floats(0.1, 3.0), st.integers(0, 2 ** 31))
def test_local_time_inverts_eta(jumps, drift, seed):
    g = np.random.default_rng(seed)
    s = np.sort(g.uniform(0, 1, len(jumps)))
    eta = Staircase(s, np.array(jumps, dtype=float), drift, 1.0)
    q = np.concatenate([s, g.uniform(0, 1, 16)])
    np.testing.assert_allclose(eta.inverse(eta(q)), q, atol=1e-12)
    # times inside a jump map to the jump's local time
    for sk in s:
        mid = 0.5 * (eta.left(sk) + eta(sk))
        assert eta.inverse(mid) == pytest.approx(sk)


def test_path_bookkeeping():
    sp, pp = synthesize(STABLE, 2.0, 0.1, 11)
    eta = sp.eta
    for sk, a, p in zip(pp.s, sp.starts, sp.pieces):
        assert a == pytest.approx(float(eta.left(sk)))
        assert a + p.lifetime == pytest.approx(float(eta(sk)))
    # excursions are disjoint in real time and the path is zero between them
    ends = sp.starts + np.array([p.lifetime for p in sp.pieces])
    assert np.all(sp.starts[1:] >= ends[:-1] - 1e-12)
    t, x = sp.arrays()
    assert t[0] == 0.0 and t[-1] == 2.0
    assert np.all(np.diff(t) >= 0) and np.all(x >= 0)
    # the path value is the piece value at the right clock time
    i = int(np.argmax([p.height for p in sp.pieces]))
    p, a = sp.pieces[i], sp.starts[i]
    mid = a + 0.5 * p.lifetime
    if mid <= 2.0:
        assert sp(mid) == pytest.approx(float(np.interp(0.5 * p.lifetime, p.times, p.values)))


def test_build_eta_matches_path():
    pp = sample_point_process(STABLE, 1.0, 0.1, RngStream(4))
    eta = build_eta(pp, STABLE)
    sp = build_path(pp, STABLE, min(eta.end, 0.5))
    np.testing.assert_allclose(eta.jumps, sp.eta.jumps, rtol=1e-9)


def test_horizon_error():
    pp = sample_point_process(DRIFT, 1.0, 0.1, 0)
    with pytest.raises(HorizonError):
        build_path(pp, DRIFT, 5.0)


def test_horizon_doubling():
    sp, pp = synthesize(DRIFT, 9.0, 0.1, 0, S=1.0)
    assert pp.horizon == 8.0 and sp.eta.end == 16.0


def test_laplace_drift_only():
    est = laplace_exponent(DRIFT, [0.5, 1.0, 3.0], 0.1, 100, 0)
    np.testing.assert_array_equal(est.psi, [1.0, 2.0, 6.0])
    np.testing.assert_array_equal(est.stderr, 0.0)


def test_laplace_concave_increasing():
    xi = np.linspace(0.2, 4.0, 12)
    est = laplace_exponent(REFLECT, xi, 0.2, 400, RngStream(1))
    d = np.diff(est.psi)
    assert np.all(d > 0)
    assert np.all(np.diff(d) <= 1e-12)
    assert np.all(est.stderr > 0)


def test_normalization_constant():
    sp, _ = synthesize(STABLE, 1.0, 0.1, 7)
    C = normalization_constant(sp)
    assert C > 0
    L, Ln = boundary_local_time(sp), boundary_local_time(sp, normalize=True)
    t = np.array([0.1, 0.4, 0.9])
    np.testing.assert_allclose(Ln(t), C * L(t))


def test_normalization_refines_with_horizon():
    # C estimates from longer horizons agree with the Laplace exponent at 1
    est = laplace_exponent(REFLECT, 1.0, 0.2, 4000, RngStream(9))
    sp, _ = synthesize(REFLECT, 200.0, 0.2, RngStream(10), S=100.0)
    assert normalization_constant(sp) == pytest.approx(float(est.psi[0]), rel=0.15)


def test_determinism(tmp_path):
    a = synthesize(STABLE, 1.0, 0.1, RngStream(21))[0]
    b = synthesize(STABLE, 1.0, 0.1, RngStream(21))[0]
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    x = sample_marginals(REFLECT, 1.0, 0.2, 20, RngStream(3))
    y = sample_marginals(REFLECT, 1.0, 0.2, 20, RngStream(3))
    np.testing.assert_array_equal(x, y)
    assert np.all(x >= 0)


def test_stationary_increments():
    # jump counts and sums over disjoint unit windows are exchangeable
    pp = sample_point_process(REFLECT, 400.0, 0.5, RngStream(12))
    eta = build_eta(pp, REFLECT)
    w = np.floor(pp.s).astype(int)
    counts = np.bincount(w, minlength=400)
    sums = np.bincount(w, weights=eta.jumps, minlength=400)
    for x in (counts, sums):
        assert stats.ks_2samp(x[:200], x[200:]).pvalue > 0.01
        assert stats.ks_2samp(x[0::2], x[1::2]).pvalue > 0.01
    assert abs(counts.mean() - 2.0) < 4 * np.sqrt(2.0 / 400)


@pytest.mark.slow
def test_marks_match_qmx_for_single_level():
    # j = unit atom at 1: every retained piece starts at 1 and is Q_m^1
    m = speed_measure("2 + 1/x")
    b = triple(m, jump_measure(atoms=[(1.0, 1.0)]), 0.0, 1.0)
    a = jump_sizes(b, 0.1, 2000, RngStream(13))
    g = RngStream(14).generator()
    q = [sample_Qmx(m, 1.0, g).lifetime for _ in range(2000)]
    assert stats.ks_2samp(a, q).pvalue > 0.01


@pytest.mark.slow
def test_normalization_cauchy_under_refinement():
    # C = Psi(1) for the reflecting case moves by less than 5% from eps to eps/2
    c1 = laplace_exponent(REFLECT, 1.0, 0.1, 60_000, RngStream(15)).psi[0]
    c2 = laplace_exponent(REFLECT, 1.0, 0.05, 60_000, RngStream(16)).psi[0]
    assert abs(c2 / c1 - 1) < 0.05


@pytest.mark.slow
def test_reflecting_marginal_is_folded_normal():
    # (m^(1/2), V_(0,1), 0) is reflecting Brownian motion
    from itosynth.limits import richardson_ks
    x1 = sample_marginals(REFLECT, 1.0, 0.1, 2000, RngStream(17, 0))
    x2 = sample_marginals(REFLECT, 1.0, 0.05, 2000, RngStream(17, 1))
    rep = richardson_ks(x1, x2, lambda x: 2 * stats.norm.cdf(x) - 1, eps=(0.1, 0.05))
    assert rep.passed()
