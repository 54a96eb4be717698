"""Pump waveforms L_in(t).

Three shapes are supported: a constant (CW) pump, a train of Gaussian
pulses centred on ``t = k * period`` for ``k >= 0``, and a chopped CW pump
that is on for ``on_duration`` at the start of every period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError
from .model import peak_from_average

__all__ = [
    "CW",
    "GaussianTrain",
    "Chopped",
    "PumpProfile",
    "pump_power_at",
    "pump_energy_per_period",
    "FWHM_PER_SIGMA",
    "TRUNCATION_SIGMAS",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
TRUNCATION_SIGMAS = 6.0


@dataclass(frozen=True)
class CW:
    power: float

    def __post_init__(self):
        if not (math.isfinite(self.power) and self.power >= 0):
            raise DomainError(f"pump power must be non-negative, got {self.power!r}")

    @property
    def peak_power(self) -> float:
        return self.power


@dataclass(frozen=True)
class GaussianTrain:
    avg_power: float
    fwhm: float
    period: float

    def __post_init__(self):
        if not (math.isfinite(self.avg_power) and self.avg_power >= 0):
            raise DomainError(f"avg_power must be non-negative, got {self.avg_power!r}")
        if not (0 < self.fwhm < self.period / 10):
            raise DomainError(
                f"pulses must be well separated (0 < fwhm < period/10), "
                f"got fwhm={self.fwhm!r}, period={self.period!r}")

    @property
    def sigma(self) -> float:
        return self.fwhm / FWHM_PER_SIGMA

    @property
    def half_width(self) -> float:
        """Half-width of the truncated support of one pulse."""
        return TRUNCATION_SIGMAS * self.sigma

    @property
    def peak_power(self) -> float:
        return peak_from_average(self.avg_power, self.fwhm, self.period)

    def with_power(self, avg_power: float) -> "GaussianTrain":
        return GaussianTrain(avg_power, self.fwhm, self.period)


@dataclass(frozen=True)
class Chopped:
    cw_power: float
    on_duration: float
    period: float

    def __post_init__(self):
        if not (math.isfinite(self.cw_power) and self.cw_power >= 0):
            raise DomainError(f"cw_power must be non-negative, got {self.cw_power!r}")
        if not (0 < self.on_duration < self.period):
            raise DomainError("need 0 < on_duration < period")

    @property
    def peak_power(self) -> float:
        return self.cw_power


PumpProfile = Union[CW, GaussianTrain, Chopped]


def _gaussian_train(profile: GaussianTrain, t):
    t = np.asarray(t, dtype=float)
    k = np.maximum(np.rint(t / profile.period), 0.0)
    offset = t - k * profile.period
    sigma = profile.sigma
    inside = np.abs(offset) <= TRUNCATION_SIGMAS * sigma
    values = np.where(inside, np.exp(-0.5 * (np.where(inside, offset, 0.0) / sigma) ** 2), 0.0)
    return profile.peak_power * values


def pump_power_at(profile: PumpProfile, t):
    """Instantaneous incident pump power (W); ``t`` may be a scalar or an array."""
    scalar = np.ndim(t) == 0
    if isinstance(profile, CW):
        out = np.full(np.shape(t), profile.power, dtype=float)
    elif isinstance(profile, GaussianTrain):
        if scalar:
            # fast path used inside the integrator
            k = max(round(t / profile.period), 0)
            x = (t - k * profile.period) / profile.sigma
            if abs(x) > TRUNCATION_SIGMAS:
                return 0.0
            return profile.peak_power * math.exp(-0.5 * x * x)
        out = _gaussian_train(profile, t)
    elif isinstance(profile, Chopped):
        phase = np.mod(np.asarray(t, dtype=float), profile.period)
        out = np.where(phase < profile.on_duration, profile.cw_power, 0.0)
    else:
        raise TypeError(f"unknown pump profile {profile!r}")
    return float(out) if scalar else out


def pump_energy_per_period(profile: PumpProfile, window: float | None = None) -> float:
    """Pump energy (J) delivered in one period, by numerical quadrature.

    A CW profile has no period, so ``window`` (s) must be given for it.
    """
    if isinstance(profile, CW):
        if window is None or window <= 0:
            raise DomainError("a CW profile needs a positive reference window")
        pieces = [(0.0, window)]
    elif isinstance(profile, GaussianTrain):
        hw = profile.half_width
        pieces = [(-hw, 0.0), (0.0, hw)]
    elif isinstance(profile, Chopped):
        pieces = [(0.0, profile.on_duration), (profile.on_duration, profile.period)]
    else:
        raise TypeError(f"unknown pump profile {profile!r}")

    total = 0.0
    for a, b in pieces:
        value, err, info = integrate.quad(
            lambda t: pump_power_at(profile, t), a, b,
            epsabs=0.0, epsrel=1e-10, limit=200, full_output=True)[:3]
        if not math.isfinite(value) or (value > 0 and err > 1e-8 * value):
            raise NumericError(f"pump energy quadrature did not converge: {info!r}")
        total += value
    return total
