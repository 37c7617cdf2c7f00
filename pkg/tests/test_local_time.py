import numpy as np
import pytest
from hypothesis import given, strategies as st

from itosynth.excursion import Excursion, StepPolicy, sample_excursion_above
from itosynth.local_time import (DegenerateGridError, estimate_local_time, occupation_residual,
                                 occupation_time)
from itosynth.rng import RngStream


def tri():
    return Excursion([0.0, 0.5, 1.0], [0.0, 0.5, 0.0])


def test_triangle_local_time_is_one():
    f = estimate_local_time(tri(), dx=1e-3)
    x = np.linspace(1e-3, 0.5 - 2e-3, 200)
    np.testing.assert_allclose(f.at(1.0, x), 1.0, rtol=1e-9)
    assert np.all(f.at(1.0, np.array([0.5, 0.7])) == 0.0)


def test_triangle_residual_zero():
    e = tri()
    f = estimate_local_time(e, dx=1e-3)
    assert occupation_residual(e, f, 0.0, 0.5) < 1e-9


def test_residual_rejects_empty_band():
    e = tri()
    f = estimate_local_time(e, dx=1e-3)
    with pytest.raises(ValueError):
        occupation_residual(e, f, 0.3, 0.3)


def test_degenerate_grid():
    with pytest.raises(DegenerateGridError):
        estimate_local_time(tri(), dx=1.0)


def test_occupation_time_exact_on_segment():
    # one rising segment: time in [a, b) is (b - a) * slope^-1
    e = Excursion([0.0, 2.0, 3.0], [0.0, 1.0, 0.0])
    assert occupation_time(e, 0.2, 0.6) == pytest.approx(0.4 * 2 + 0.4 * 1)


@given(st.integers(0, 2**31), st.floats(0.05, 1.0))
def test_field_monotone_in_time(seed, eps):
    e = sample_excursion_above(eps, RngStream(seed))
    f = estimate_local_time(e, dx=e.height / 200)
    assert np.all(np.diff(f.values, axis=0) >= -1e-12)
    assert np.all(f.values >= 0)
    # l(t, x) = l(zeta, x) for t >= zeta
    np.testing.assert_array_equal(f.at(e.lifetime * 2, f.levels), f.at(e.lifetime, f.levels))


def test_bottom_bin_vanishes_under_refinement():
    # l(t, 0) = 0 holds in the limit; the first bin carries O(sqrt(dt) + dx)
    gen = np.random.default_rng(3)
    seeds = gen.integers(2**31, size=10)
    med = []
    for k in (1, 4, 16):
        pol = StepPolicy(dt=1e-4 / k)
        vals = []
        for s in seeds:
            e = sample_excursion_above(0.5, RngStream(int(s)), pol)
            vals.append(estimate_local_time(e, dx=1e-3 / k, times=[e.lifetime]).final[0])
        med.append(np.median(vals))
    assert med[0] > med[1] > med[2]


def test_oversized_field_rejected():
    e = sample_excursion_above(0.1, RngStream(4))
    with pytest.raises(ValueError):
        estimate_local_time(e, dx=e.height * 1e-6)


def test_requested_times_subset():
    e = sample_excursion_above(0.2, RngStream(4))
    full = estimate_local_time(e)
    idx = np.array([0, e.times.size // 2, e.times.size - 1])
    sub = estimate_local_time(e, times=e.times[idx])
    np.testing.assert_allclose(sub.values, full.values[idx])
    with pytest.raises(ValueError):
        estimate_local_time(e, times=[e.times[1] * 0.5 + e.times[0] * 0.5])


def test_brownian_excursion_band_residuals():
    gen = np.random.default_rng(8)
    for _ in range(20):
        e = sample_excursion_above(0.1, gen)
        f = estimate_local_time(e)
        for a, b in [(0.1, 0.3), (0.05, 0.2)]:
            if occupation_time(e, a, b) > 0:
                assert occupation_residual(e, f, a, b) <= 0.05


def test_refinement_does_not_worsen():
    gen = np.random.default_rng(9)
    res = {1: [], 2: []}
    for _ in range(20):
        seed = int(gen.integers(2**31))
        for k in (1, 2):
            e = sample_excursion_above(0.1, RngStream(seed), StepPolicy(dt=1e-4 / k))
            f = estimate_local_time(e, dx=1e-3 / k)
            res[k].append(occupation_residual(e, f, 0.0503, 0.0817))
    assert np.median(res[2]) <= np.median(res[1]) + 1e-9
