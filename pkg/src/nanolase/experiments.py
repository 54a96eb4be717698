"""Measured quantities: LL curves, thresholds, pulse shapes and loss shares."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from .dynamics import DEFAULT_RESPONSE_WINDOW, Trajectory, integrate, steady_state
from .errors import (DomainError, NanolaseError, NoPulseError, NoThresholdError,
                     UndefinedFractionError, UnboundedPulseError)
from .excitation import CW, GaussianTrain
from .model import LaserParams, RateState, gain

__all__ = [
    "LLCurve",
    "ThresholdFit",
    "PulseMetrics",
    "ll_curve_pulsed",
    "ll_curve_cw",
    "ll_point_pulsed",
    "extract_threshold",
    "convolve_irf",
    "measure_fwhm",
    "pulse_response",
    "auger_fraction",
    "ll_plot_data",
    "write_json",
    "worker_count",
]

PULSED = "pulsed-averaged"
CONTINUOUS = "CW"
MIN_SLOPE_RATIO = 1.5


@dataclass(frozen=True)
class LLCurve:
    pump_in: np.ndarray
    light_out: np.ndarray
    regime: str = PULSED

    def __post_init__(self):
        x = np.asarray(self.pump_in, dtype=float)
        y = np.asarray(self.light_out, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise DomainError("pump_in and light_out must be 1-D arrays of equal length")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise DomainError("pump_in must be strictly increasing")
        if np.any(y < 0):
            raise DomainError("light_out must be non-negative")
        if self.regime not in (PULSED, CONTINUOUS):
            raise DomainError(f"unknown regime {self.regime!r}")
        object.__setattr__(self, "pump_in", x)
        object.__setattr__(self, "light_out", y)

    def __len__(self):
        return self.pump_in.size

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.pump_in.tolist(), self.light_out.tolist()))

    def scaled(self, factor: float) -> "LLCurve":
        return LLCurve(self.pump_in, self.light_out * factor, self.regime)

    def to_csv(self, path, light_column: str = "light_out_W") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pump_W", light_column])
            for x, y in self.points:
                writer.writerow([repr(x), repr(y)])


@dataclass(frozen=True)
class ThresholdFit:
    threshold: float
    slope_below: float
    slope_above: float
    residual: float
    intercept: float = 0.0

    def predict(self, pump):
        pump = np.asarray(pump, dtype=float)
        return (self.intercept + self.slope_below * pump
                + (self.slope_above - self.slope_below) * np.maximum(pump - self.threshold, 0.0))


@dataclass(frozen=True)
class PulseMetrics:
    fwhm: float
    rise_time_10_90: float
    fall_time_90_10: float
    peak_delay: float
    trajectory: Trajectory | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k != "trajectory"}


# --- sweeps -----------------------------------------------------------------

def worker_count(workers: int | None = None) -> int:
    """Worker processes for independent sweep points, capped by NANOLASE_THREADS."""
    cap = os.environ.get("NANOLASE_THREADS")
    n = workers if workers is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(int(cap), 1))
    return max(n, 1)


def _sweep(fn, powers, workers):
    n = worker_count(workers)
    if n == 1 or len(powers) < 2:
        return [fn(p) for p in powers]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, powers))


def _check_powers(powers) -> np.ndarray:
    powers = np.asarray(powers, dtype=float)
    if powers.ndim != 1 or powers.size == 0:
        raise DomainError("powers must be a non-empty 1-D sequence")
    if np.any(powers < 0) or (powers.size > 1 and not np.all(np.diff(powers) > 0)):
        raise DomainError("powers must be non-negative and strictly increasing")
    return powers


def _annotate(exc: NanolaseError, power: float) -> NanolaseError:
    wrapped = type(exc).__new__(type(exc))
    Exception.__init__(wrapped, f"at pump power {power!r} W: {exc}")
    wrapped.__dict__.update(exc.__dict__)
    return wrapped


def ll_point_pulsed(params: LaserParams, pump: GaussianTrain, rel_tol: float = 1e-8) -> float:
    """Period-averaged output for one pulsed pump power.

    One warm-up period is integrated first; the output is averaged over the
    following period, which is centred on the second pulse.
    """
    period = pump.period
    warm = integrate(params, pump, (-3.0 * pump.fwhm, 0.5 * period), rel_tol=rel_tol)
    run = integrate(params, pump, (0.5 * period, 1.5 * period), init=warm.final,
                    rel_tol=rel_tol)
    return float(np.trapezoid(run.L_out, run.t) / period)


def _pulsed_point(power, params, template, rel_tol):
    try:
        return ll_point_pulsed(params, template.with_power(power), rel_tol)
    except NanolaseError as exc:
        raise _annotate(exc, power) from exc


def _cw_point(power, params):
    try:
        return params.light_out(steady_state(params, power).P)
    except NanolaseError as exc:
        raise _annotate(exc, power) from exc


def ll_curve_pulsed(params: LaserParams, pulse_template: GaussianTrain, powers,
                    rel_tol: float = 1e-8, workers: int | None = None) -> LLCurve:
    """Period-averaged LL curve for a Gaussian pulse train at each average power."""
    if not isinstance(pulse_template, GaussianTrain):
        raise DomainError("pulse_template must be a GaussianTrain")
    powers = _check_powers(powers)
    fn = partial(_pulsed_point, params=params, template=pulse_template, rel_tol=rel_tol)
    out = _sweep(fn, powers.tolist(), workers)
    return LLCurve(powers, np.maximum(out, 0.0), PULSED)


def ll_curve_cw(params: LaserParams, powers, workers: int | None = None) -> LLCurve:
    powers = _check_powers(powers)
    out = _sweep(partial(_cw_point, params=params), powers.tolist(), workers)
    return LLCurve(powers, np.maximum(out, 0.0), CONTINUOUS)


# --- threshold ----------------------------------------------------------------

def _line(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return coef, float(r @ r)


def extract_threshold(ll: LLCurve) -> ThresholdFit:
    """Least-squares continuous two-segment fit; the breakpoint is the threshold.

    Breakpoints at every interior sample are tried, and between neighbouring
    samples ``x_i < x_b < x_{i+1}`` the optimum is found exactly: there the
    continuous hinge is the pair of independent line fits to either side,
    accepted when their intersection falls inside the interval.
    """
    x, y = ll.pump_in, ll.light_out
    n = x.size
    if n < 8:
        raise DomainError(f"need at least 8 points to fit a threshold, got {n}")
    # conditioning only; all outputs are mapped back to input units
    xs, ys = x[-1], (np.max(np.abs(y)) or 1.0)
    u, v = x / xs, y / ys

    best = None
    for k in range(1, n - 1):
        A = np.column_stack([np.ones(n), u, np.maximum(u - u[k], 0.0)])
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        r = v - A @ coef
        cand = (float(r @ r), u[k], coef[0], coef[1], coef[1] + coef[2])
        if best is None or cand[0] < best[0]:
            best = cand
    for i in range(1, n - 2):
        (a1, b1), sse1 = _line(u[: i + 1], v[: i + 1])
        (a2, b2), sse2 = _line(u[i + 1:], v[i + 1:])
        if b1 == b2:
            continue
        ub = (a2 - a1) / (b1 - b2)
        if u[i] < ub < u[i + 1] and sse1 + sse2 < best[0]:
            best = (sse1 + sse2, ub, a1, b1, b2)

    sse, ub, a, b_lo, b_hi = best
    slope_below = b_lo * ys / xs
    slope_above = b_hi * ys / xs
    ratio = math.inf if slope_below <= 0 < slope_above else (
        slope_above / slope_below if slope_below > 0 else 0.0)
    if ratio < MIN_SLOPE_RATIO:
        raise NoThresholdError(
            f"no slope change detected (slope ratio {ratio:.3g} < {MIN_SLOPE_RATIO})")
    rms_y = math.sqrt(float(v @ v) / n)
    residual = math.sqrt(sse / n) / rms_y if rms_y > 0 else 0.0
    return ThresholdFit(float(ub * xs), float(slope_below), float(slope_above),
                        float(residual), float(a * ys))


# --- pulse shape --------------------------------------------------------------

def _bin_average(t, y, edges):
    """Average of the piecewise-linear interpolant of (t, y) over each bin."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    seg = np.diff(t)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * seg)])
    e = np.clip(edges, t[0], t[-1])
    j = np.clip(np.searchsorted(t, e, side="right") - 1, 0, t.size - 2)
    tau = e - t[j]
    slope = (y[j + 1] - y[j]) / seg[j]
    C = cum[j] + y[j] * tau + 0.5 * slope * tau * tau
    return np.diff(C) / np.diff(edges)


def convolve_irf(traj: Trajectory, irf_fwhm: float, dt: float | None = None) -> Trajectory:
    """Blur the output channel with a unit-area Gaussian instrument response.

    The trajectory is first resampled onto a uniform grid of step ``dt``
    (default ``irf_fwhm / 20``) by bin-averaging, which keeps the integrated
    signal exact; the full discrete convolution then extends the time axis
    by the kernel half-width on both sides.
    """
    if not irf_fwhm > 0:
        raise DomainError("irf_fwhm must be positive")
    duration = traj.t[-1] - traj.t[0]
    if duration < 3.0 * irf_fwhm:
        raise DomainError(f"trajectory spans {duration:.3g} s, shorter than 3x the IRF FWHM")
    dt = dt or irf_fwhm / 20.0
    nbins = int(math.ceil(duration / dt))
    edges = traj.t[0] + dt * np.arange(nbins + 1)
    centres = 0.5 * (edges[1:] + edges[:-1])
    last = edges[-1]
    if last > traj.t[-1]:
        # pad beyond the final sample with the final value so bins stay whole
        tt = np.append(traj.t, last)
        light = _bin_average(tt, np.append(traj.L_out, traj.L_out[-1]), edges)
        photons = _bin_average(tt, np.append(traj.P, traj.P[-1]), edges)
    else:
        light = _bin_average(traj.t, traj.L_out, edges)
        photons = _bin_average(traj.t, traj.P, edges)

    sigma = irf_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    half = int(math.ceil(6.0 * sigma / dt))
    offsets = dt * np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()

    t_out = centres[0] + dt * np.arange(-half, nbins + half)
    light_out = np.convolve(light, kernel, mode="full")
    photons_out = np.convolve(photons, kernel, mode="full")
    return Trajectory(t_out, np.interp(t_out, traj.t, traj.N_E),
                      np.interp(t_out, traj.t, traj.N_G), photons_out, light_out,
                      traj.params_hash, traj.clamp_events, traj.nfev)


def _crossing(t, y, i, level):
    """Time where y crosses ``level`` between samples i and i+1 (linear)."""
    y0, y1 = y[i], y[i + 1]
    if y1 == y0:
        return float(t[i])
    return float(t[i] + (level - y0) * (t[i + 1] - t[i]) / (y1 - y0))


def _edges(t, y, fraction):
    """First upward and last downward crossings of ``fraction`` of the maximum."""
    level = fraction * np.max(y)
    above = np.flatnonzero(y >= level)
    first, last = above[0], above[-1]
    if first == 0 or last == y.size - 1:
        raise UnboundedPulseError(
            f"signal does not fall below {fraction:g} of its maximum on both sides")
    return _crossing(t, y, first - 1, level), _crossing(t, y, last, level)


def measure_fwhm(traj: Trajectory) -> float:
    """Full width at half maximum of the output channel."""
    y = np.asarray(traj.L_out, dtype=float)
    if y.size < 3 or not np.max(y) > 0:
        raise UnboundedPulseError("no pulse in trajectory")
    rise, fall = _edges(traj.t, y, 0.5)
    return fall - rise


def pulse_response(params: LaserParams, pump: GaussianTrain, irf_fwhm: float | None = None,
                   rel_tol: float = 1e-8,
                   window: float = DEFAULT_RESPONSE_WINDOW) -> PulseMetrics:
    """Shape of the lasing pulse following the pump pulse centred at t = 0.

    The system starts quiescent; the output is analysed from the pump's
    leading edge to ``window`` after its centre, optionally after blurring
    with a Gaussian instrument response of FWHM ``irf_fwhm``.
    """
    if not isinstance(pump, GaussianTrain):
        raise DomainError("pulse_response needs a GaussianTrain pump")
    t0 = -3.0 * pump.fwhm
    traj = integrate(params, pump, (t0, 0.5 * pump.period), rel_tol=rel_tol).window(t0, window)

    # photon density that spontaneous emission alone would sustain at the carrier peak
    se_level = (params.confinement * params.se_cavity_rate * float(np.max(traj.N_G))
                * params.tau_p)
    if not np.max(traj.P) > 10.0 * se_level:
        raise NoPulseError("no lasing pulse: photon density stays near the spontaneous level")

    if irf_fwhm:
        traj = convolve_irf(traj, irf_fwhm, dt=min(irf_fwhm, pump.fwhm) / 20.0)
    t, y = traj.t, traj.L_out
    fwhm = measure_fwhm(traj)
    r10, f10 = _edges(t, y, 0.1)
    r90, f90 = _edges(t, y, 0.9)
    peak = float(t[int(np.argmax(y))])
    return PulseMetrics(fwhm, r90 - r10, f10 - f90, peak, traj)


def auger_fraction(params: LaserParams, operating_state: RateState,
                   include_stimulated: bool = True) -> float:
    """Share of lasing-level carrier loss due to Auger recombination.

    With ``include_stimulated=False`` the share is taken among recombination
    channels only, which depends on the carrier density alone.
    """
    n, p = operating_state.N_G, operating_state.P
    auger = params.C_A * n ** 3
    stim = max(params.v_g * gain(n, params) * p, 0.0) if include_stimulated else 0.0
    total = n * params.se_rate + n / params.tau_nr_G + auger + stim
    if total <= 0:
        raise UndefinedFractionError("lasing level has no losses at this state")
    return auger / total


# --- export -------------------------------------------------------------------

def ll_plot_data(ll: LLCurve, fit: ThresholdFit | None = None, label: str = "model") -> dict:
    data = {
        "regime": ll.regime,
        "x_label": "pump power (W)",
        "y_label": "output power (W)",
        "series": [{"name": label, "x": ll.pump_in.tolist(), "y": ll.light_out.tolist()}],
        "annotations": [],
    }
    if fit is not None:
        data["series"].append({"name": "two-segment fit", "x": ll.pump_in.tolist(),
                               "y": fit.predict(ll.pump_in).tolist()})
        data["annotations"].append({"type": "threshold", "x": fit.threshold,
                                    "label": f"threshold {fit.threshold:.4g} W"})
    return data


def write_json(data: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
