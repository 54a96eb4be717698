import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nanolase import CW, Chopped, DomainError, GaussianTrain, peak_from_average
from nanolase.excitation import pump_energy_per_period, pump_power_at


def test_cw_constant():
    pump = CW(9e-6)
    assert pump_power_at(pump, -1.0) == 9e-6
    assert pump_power_at(pump, 3.3e-9) == 9e-6
    np.testing.assert_array_equal(pump_power_at(pump, np.linspace(0, 1, 5)), 9e-6)


def test_gaussian_peak_and_gap():
    pump = GaussianTrain(6.5e-6, 3.5e-12, 13e-9)
    peak = peak_from_average(6.5e-6, 3.5e-12, 13e-9)
    assert pump_power_at(pump, 0.0) == pytest.approx(peak, rel=1e-14)
    assert pump_power_at(pump, 26e-9) == pytest.approx(peak, rel=1e-9)
    assert pump_power_at(pump, 6.5e-9) < 1e-100 * peak
    assert pump_power_at(pump, pump.fwhm / 2) == pytest.approx(peak / 2, rel=1e-12)


def test_gaussian_truncated_beyond_six_sigma():
    pump = GaussianTrain(1e-6, 1e-12, 1e-9)
    assert pump_power_at(pump, 6.01 * pump.sigma) == 0.0
    assert pump_power_at(pump, 5.99 * pump.sigma) > 0.0


def test_chopped_levels():
    pump = Chopped(2e-3, 1e-3, 1 / 17)
    assert pump_power_at(pump, 0.5e-3) == 2e-3
    assert pump_power_at(pump, 2e-3) == 0.0
    assert pump_power_at(pump, 1 / 17 + 0.5e-3) == 2e-3


def test_energy_per_period_gaussian():
    pump = GaussianTrain(6.5e-6, 3.5e-12, 13e-9)
    assert pump_energy_per_period(pump) == pytest.approx(84.5e-15, rel=1e-6)


def test_energy_per_period_chopped_and_cw():
    assert pump_energy_per_period(Chopped(2e-3, 1e-3, 1 / 17)) == pytest.approx(2e-6, rel=1e-9)
    assert pump_energy_per_period(CW(5e-6), window=2e-9) == pytest.approx(1e-14, rel=1e-12)
    with pytest.raises(DomainError):
        pump_energy_per_period(CW(5e-6))


@given(st.floats(1e-9, 1e-3), st.floats(0.2e-12, 20e-12), st.floats(1e-9, 1e-7))
def test_gaussian_energy_normalisation(avg, fwhm, period):
    pump = GaussianTrain(avg, fwhm, max(period, 11 * fwhm))
    assert pump_energy_per_period(pump) == pytest.approx(avg * pump.period, rel=1e-6)


@given(st.floats(0, 1e-6), st.integers(0, 50))
def test_gaussian_periodic_and_non_negative(t, k):
    pump = GaussianTrain(1e-5, 2e-12, 5e-9)
    t = t % pump.period
    a = pump_power_at(pump, t)
    b = pump_power_at(pump, t + k * pump.period)
    assert a >= 0
    assert b == pytest.approx(a, rel=1e-6, abs=1e-12 * pump.peak_power)


def test_array_matches_scalar():
    pump = GaussianTrain(1e-5, 2e-12, 5e-9)
    t = np.linspace(-20e-12, 5.02e-9, 4001)
    np.testing.assert_allclose(pump_power_at(pump, t), [pump_power_at(pump, v) for v in t],
                               rtol=1e-13, atol=0)


@pytest.mark.parametrize("make", [
    lambda: CW(-1.0),
    lambda: GaussianTrain(1e-6, 2e-12, 1.5e-11),
    lambda: GaussianTrain(1e-6, 0.0, 1e-9),
    lambda: GaussianTrain(-1e-6, 1e-12, 1e-9),
    lambda: Chopped(1e-3, 2.0, 1.0),
    lambda: Chopped(1e-3, 0.0, 1.0),
])
def test_invalid_profiles(make):
    with pytest.raises(DomainError):
        make()
