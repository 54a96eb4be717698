"""Acceptance criteria, one pass/fail line each in the captured output."""

import math

import numpy as np
import pytest

from nanolase import (CW, LT, RT, GaussianTrain, LLCurve, RateState, auger_fraction,
                      convolve_irf, energy_ledger, extract_threshold, fit_eta, integrate,
                      ll_curve_cw, ll_curve_pulsed, measure_fwhm, peak_from_average,
                      pulse_response, rk4_integrate, spot_scaled_eta, steady_state)
from nanolase.dynamics import Trajectory, pulse_span
from nanolase.fit import MasterCurve

LT_SWEEP = np.linspace(1e-6, 30e-6, 40)
PULSE_3P5 = GaussianTrain(0.0, 3.5e-12, 13e-9)


def report(label, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, f"{label}: {detail}"


def cw_threshold(eta, expected):
    p = LT.params("cw", eta=eta)
    return extract_threshold(ll_curve_cw(p, np.linspace(0.15, 4.6, 40) * expected)).threshold


@pytest.fixture(scope="module")
def lt_ll():
    return ll_curve_pulsed(LT.params("pulsed"), PULSE_3P5, LT_SWEEP)


def test_c1_calibration_anchor(lt_ll):
    thr = extract_threshold(lt_ll).threshold
    report("criterion 1, LT pulsed threshold", abs(thr / 6.5e-6 - 1) <= 0.10,
           f"{thr * 1e6:.3f} uW, target 6.5 uW +-10%")


def test_c2_cw_cross_prediction():
    thr = cw_threshold(1.4e-2, 35e-6)
    report("criterion 2, CW threshold at eta 1.4e-2", abs(thr / 35e-6 - 1) <= 0.40,
           f"{thr * 1e6:.2f} uW, target 35 uW +-40%")


def test_c3_drift_corrected_cw():
    thr = cw_threshold(0.055, 9e-6)
    report("criterion 3, CW threshold at eta 0.055", abs(thr / 9e-6 - 1) <= 0.40,
           f"{thr * 1e6:.2f} uW, target 9 uW +-40%")


def test_c4_spot_scaling():
    eta = spot_scaled_eta(1.3e-3, 4.0e-6, 1.2e-6)
    report("criterion 4, spot-scaled eta", 1.33e-2 <= eta <= 1.47e-2,
           f"{eta:.4e}, window [1.33e-2, 1.47e-2]")


def test_c5_fast_modulation():
    pump = GaussianTrain(136e-6, 1e-12, 13e-9)
    slow = pulse_response(RT.params("pulsed", tau_relax=0.8e-12), pump).fwhm
    fast = pulse_response(RT.params("pulsed", tau_relax=0.2e-12), pump).fwhm
    report("criterion 5a, RT 1-ps pump FWHM", abs(slow - 1.2e-12) <= 0.3e-12,
           f"{slow * 1e12:.3f} ps, target 1.2 +- 0.3 ps")
    report("criterion 5b, faster relaxation narrows pulse", fast < slow,
           f"{fast * 1e12:.3f} ps vs {slow * 1e12:.3f} ps")


def test_c6_streak_lt():
    m = pulse_response(LT.params("pulsed"), GaussianTrain(13e-6, 3.4e-12, 13e-9), 3.2e-12)
    report("criterion 6a, LT streak FWHM", abs(m.fwhm / 14.1e-12 - 1) <= 0.30,
           f"{m.fwhm * 1e12:.2f} ps, target 14.1 ps +-30%")


def test_c6_streak_rt():
    m = pulse_response(RT.params("pulsed"), GaussianTrain(136e-6, 3.4e-12, 13e-9), 3.2e-12)
    report("criterion 6b, RT streak FWHM", abs(m.fwhm - 3.5e-12) <= 1e-12,
           f"{m.fwhm * 1e12:.2f} ps, target 3.5 +- 1 ps")


@pytest.fixture(scope="module")
def auger_states():
    p = LT.params("cw")
    thr = extract_threshold(ll_curve_cw(p, np.linspace(0.15, 4.6, 40) * 9e-6)).threshold
    return p, steady_state(p, thr), steady_state(p, 10 * thr)


def test_c7_auger_at_threshold(auger_states):
    p, at, _ = auger_states
    frac = auger_fraction(p, at)
    report("criterion 7a, Auger share at threshold", frac < 0.05, f"{frac:.4f}, limit 0.05")


def test_c7_auger_growth(auger_states):
    p, at, above = auger_states
    f1, f10 = auger_fraction(p, at), auger_fraction(p, above)
    report("criterion 7b, Auger share growth at 10x threshold", f10 >= 3 * f1,
           f"{f10:.4f} vs {f1:.4f} ({f10 / f1:.2f}x, need >= 3x)")


def test_c8_rk4_oracle():
    p = LT.params("pulsed")
    pump = GaussianTrain(13e-6, 3.5e-12, 13e-9)
    span = (-3 * pump.fwhm, -3 * pump.fwhm + 100e-12)
    ref = rk4_integrate(p, pump, span, dt=p.tau_p / 200)
    got = integrate(p, pump, span, rel_tol=1e-10)
    err = max(np.max(np.abs(getattr(got, k) - np.interp(got.t, ref.t, getattr(ref, k))))
              / np.max(getattr(ref, k)) for k in ("N_E", "N_G", "P"))
    report("criterion 8a, adaptive vs RK4 over 100 ps", err <= 1e-4,
           f"max relative deviation {err:.2e}, limit 1e-4")


def test_c8_exponential_decay():
    p = LT.params("pulsed", beta_c=1e-15, C_A=0.0)
    traj = integrate(p, CW(0.0), (0.0, 1e-9), init=RateState(0, 0, 1e22, 0), rel_tol=1e-10,
                     sample_dt=10e-12)
    exact = 1e22 * np.exp(-traj.t * (1 / p.tau_sp + 1 / p.tau_nr_G))
    err = np.max(np.abs(traj.N_G / exact - 1))
    report("criterion 8b, exponential decay", err <= 1e-6, f"{err:.2e}, limit 1e-6")


def test_c8_gaussian_quadrature():
    t = np.arange(-40e-12, 40e-12, 0.05e-12)
    sigma = 3.5e-12 / (2 * math.sqrt(2 * math.log(2)))
    y = np.exp(-0.5 * (t / sigma) ** 2)
    z = np.zeros_like(t)
    out = measure_fwhm(convolve_irf(Trajectory(t, z, z, z, y), 3.2e-12))
    err = out / (math.hypot(3.5, 3.2) * 1e-12) - 1
    report("criterion 8c, Gaussian convolution FWHM", abs(err) <= 0.01,
           f"{out * 1e12:.4f} ps vs 4.7424 ps ({err:+.2e})")


def test_c8_ledger_closure():
    worst = 0.0
    for params, power in ((LT.params("pulsed"), 13e-6), (RT.params("pulsed"), 136e-6)):
        pump = GaussianTrain(power, 3.5e-12, 13e-9)
        traj = integrate(params, pump, pulse_span(pump, 1), rel_tol=1e-8)
        worst = max(worst, energy_ledger(traj, params, pump).closure_residual)
    report("criterion 8d, carrier ledger closure", worst <= 1e-3, f"{worst:.2e}, limit 1e-3")


def test_c8_tolerance_halving(lt_ll):
    p = LT.params("pulsed")
    shifts = {}
    half = ll_curve_pulsed(p, PULSE_3P5, LT_SWEEP, rel_tol=5e-9)
    shifts["threshold"] = extract_threshold(half).threshold / extract_threshold(lt_ll).threshold
    pump = GaussianTrain(13e-6, 3.4e-12, 13e-9)
    shifts["fwhm"] = (pulse_response(p, pump, 3.2e-12, rel_tol=5e-9).fwhm
                      / pulse_response(p, pump, 3.2e-12, rel_tol=1e-8).fwhm)
    cw = LT.params("cw")
    shifts["steady P"] = steady_state(cw, 30e-6, tol=5e-10).P / steady_state(cw, 30e-6).P
    worst = max(abs(v - 1) for v in shifts.values())
    detail = ", ".join(f"{k} {abs(v - 1):.1e}" for k, v in shifts.items())
    report("criterion 8e, halving rel_tol", worst < 1e-3, f"{detail}; limit 1e-3")


def test_c9_fit_round_trip(rng):
    p = LT.params("cw")
    worst_clean = worst_noisy = 0.0
    for eta in np.geomspace(1e-3, 1e-1, 5):
        powers = np.geomspace(0.2, 5.0, 20) * 0.055 * 11.4e-6 / eta
        ll = ll_curve_cw(p.replace(eta=eta), powers)
        bracket = (eta / 10, min(eta * 10, 1.0))
        master = MasterCurve(p, "CW", None, (bracket[0] * powers[0], bracket[1] * powers[-1]))
        clean = fit_eta(p, ll, None, bracket, master=master).eta_hat
        noisy = LLCurve(powers, ll.light_out * (1 + 0.01 * rng.standard_normal(powers.size)), "CW")
        rough = fit_eta(p, noisy, None, bracket, master=master).eta_hat
        worst_clean = max(worst_clean, abs(clean / eta - 1))
        worst_noisy = max(worst_noisy, abs(rough / eta - 1))

    pulsed = LT.params("pulsed")
    powers = np.linspace(1e-6, 30e-6, 12)
    ll = ll_curve_pulsed(pulsed, PULSE_3P5, powers)
    master = MasterCurve(pulsed, "pulsed-averaged", PULSE_3P5, (5e-4 * 1e-6, 5e-3 * 30e-6),
                         per_decade=20)
    clean = fit_eta(pulsed, ll, PULSE_3P5, (5e-4, 5e-3), master=master).eta_hat
    noisy = LLCurve(powers, ll.light_out * (1 + 0.01 * rng.standard_normal(powers.size)))
    rough = fit_eta(pulsed, noisy, PULSE_3P5, (5e-4, 5e-3), master=master).eta_hat
    worst_clean = max(worst_clean, abs(clean / 1.3e-3 - 1))
    worst_noisy = max(worst_noisy, abs(rough / 1.3e-3 - 1))
    report("criterion 9a, noiseless eta recovery", worst_clean <= 0.01,
           f"worst {worst_clean:.2e}, limit 1e-2")
    report("criterion 9b, eta recovery with 1% noise", worst_noisy <= 0.05,
           f"worst {worst_noisy:.2e}, limit 5e-2")


def test_c10_peak_power():
    peak = peak_from_average(6.5e-6, 3.5e-12, 13e-9)
    report("criterion 10a, peak power convention", abs(peak - 22.7e-3) <= 0.1e-3,
           f"{peak * 1e3:.3f} mW, target 22.7 +- 0.1 mW")
    report("criterion 10b, external 21 mW check", abs(peak / 21e-3 - 1) <= 0.10,
           f"{peak * 1e3:.2f} mW vs 21 mW ({peak / 21e-3 - 1:+.1%})")
