import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from itosynth.excursion import Excursion, path_stats, sample_excursion_above
from itosynth.local_time import estimate_local_time
from itosynth.measures import canonical_m, speed_measure
from itosynth.rng import RngStream
from itosynth.time_change import (ClockError, clock, clock_from_field, sample_nm_above,
                                  sample_Qmx, shift, time_change_excursion)

M_HALF = canonical_m(0.5)
M_LIN = speed_measure("1")
M_LOG = speed_measure("2 + 1/x")


def tri():
    return Excursion([0.0, 0.5, 1.0], [0.0, 0.5, 0.0])


def test_triangle_clock_hand_integral():
    assert clock(tri(), M_LIN).total == pytest.approx(0.5)
    assert clock(tri(), M_HALF).total == pytest.approx(1.0)


def test_atom_adds_mass_times_local_time():
    m_atom = speed_measure("2", atoms=[(0.25, 0.3)])
    extra = clock(tri(), m_atom).total - clock(tri(), M_HALF).total
    assert extra == pytest.approx(0.3 * 1.0, rel=1e-6)


def test_clock_inverse_pair():
    A = clock(tri(), M_LIN)
    a = np.linspace(0, A.total, 11)
    np.testing.assert_allclose(A(A.inverse(a)), a, atol=1e-12)


@given(st.integers(0, 2**31))
def test_canonical_clock_is_identity(seed):
    e = sample_excursion_above(0.1, RngStream(seed))
    A = clock(e, M_HALF)
    np.testing.assert_allclose(A.values, e.times, rtol=1e-9, atol=1e-12)
    em = time_change_excursion(e, M_HALF)
    assert em.lifetime == pytest.approx(e.lifetime)
    assert em.height == e.height


def test_linear_m_halves_time():
    e = sample_excursion_above(0.1, RngStream(1))
    em = time_change_excursion(e, M_LIN)
    np.testing.assert_allclose(em.times, e.times / 2, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("m", [M_HALF, M_LIN, M_LOG, speed_measure("2", atoms=[(0.05, 0.5)])])
def test_fast_clock_matches_field_route(m):
    e = sample_excursion_above(0.2, RngStream(6))
    f = estimate_local_time(e)
    A = clock(e, m, dx=f.dx)
    np.testing.assert_allclose(A.values, clock_from_field(f, m), rtol=1e-3, atol=1e-12)


def test_singular_clock_finite():
    e = sample_excursion_above(0.1, RngStream(2))
    assert np.isfinite(clock(e, M_LOG).total)


def test_clock_error_on_non_integrable():
    bad = speed_measure(lambda x: np.where(x > 0.02, np.inf, 1.0), antiderivative=lambda x: np.where(x > 0.02, np.inf, x), validate=False)
    with pytest.raises(ClockError):
        clock(sample_excursion_above(0.1, RngStream(2)), bad)


def test_shift_geometry():
    s = shift(tri(), 0.25)
    np.testing.assert_allclose(s.times, [0.0, 0.25, 0.75])
    np.testing.assert_allclose(s.values, [0.25, 0.5, 0.0])
    assert shift(tri(), 0.5).is_zero and shift(tri(), 3.0).is_zero
    with pytest.raises(ValueError):
        shift(tri(), -1.0)


@given(st.integers(0, 2**31), st.floats(0.01, 0.09),
       st.sampled_from(["2 + 1/x", "1", "3*x", "x^-0.5", "2*log(2.718281828459045+x)"]))
def test_shift_commutes_with_time_change(seed, x, dens):
    # both orders agree up to how the clock of the step crossing x is split
    m = speed_measure(dens)
    e = sample_excursion_above(0.1, RngStream(seed))
    dx = 1e-3
    A = clock(e, m, dx)
    a = time_change_excursion(shift(e, x), m, dx)
    b = shift(time_change_excursion(e, m, dx, A=A), x)
    i = int(np.searchsorted(e.times, path_stats(e).tau(x), side="right"))
    tol = A.values[i] - A.values[i - 1] + 1e-12
    assert a.values[0] == b.values[0] == x
    np.testing.assert_array_equal(a.values[1:], b.values[1:])
    assert np.max(np.abs(a.times - b.times)) <= tol


def test_qmx_starts_at_x():
    p = sample_Qmx(M_LOG, 0.3, RngStream(1))
    assert p.values[0] == 0.3 and p.values[-1] == 0.0


def test_nm_above_preserves_height():
    e = sample_nm_above(M_LOG, 0.1, RngStream(5))
    assert e.height >= 0.1 and e.values[0] == 0.0


def test_lifetime_formula_from_clock():
    # zeta(e_{m,a}) = A(zeta) - A(tau_a) on {M > a}
    e = sample_excursion_above(0.2, RngStream(12))
    a = 0.1
    A = clock(e, M_LOG, dx=1e-3)
    tau = path_stats(e).tau(a)
    lhs = time_change_excursion(shift(e, a), M_LOG, dx=1e-3).lifetime
    assert lhs == pytest.approx(A.total - A(tau), rel=2e-2)


@pytest.mark.slow
def test_qmx_gamblers_ruin():
    gen = np.random.default_rng(4)
    hits = np.mean([sample_Qmx(M_HALF, 1.0, gen).height > 2.0 for _ in range(4000)])
    assert abs(hits - 0.5) < 3 * np.sqrt(0.25 / 4000)


@pytest.mark.slow
def test_qmx_log_speed_matches_time_changed_bm():
    # direct construction: absorbed BM from 1 time-changed by the same m
    from itosynth.excursion import sample_absorbed_bm
    gen = np.random.default_rng(5)
    a = [sample_Qmx(M_LOG, 1.0, gen).lifetime for _ in range(2000)]
    b = [clock(sample_absorbed_bm(1.0, gen), M_LOG).total for _ in range(2000)]
    assert stats.ks_2samp(a, b).pvalue > 0.01
