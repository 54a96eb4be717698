"""Estimate the pump absorption efficiency ``eta`` from a measured LL curve.

The model depends on ``eta`` and the pump power only through their product,
so every model LL curve is a horizontal shift (in log pump) of one master
curve ``F(u)`` computed once at ``eta = 1``.  The fit tabulates ``F`` over
the range of ``u = eta * pump`` that the bracket can reach and interpolates
it (monotone cubic in log-log coordinates); each trial ``eta`` then costs an
interpolation instead of a sweep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .dynamics import integrate, steady_state
from .errors import AmbiguousFitError, ConfigError, DomainError, NoLasingError
from .excitation import GaussianTrain
from .experiments import CONTINUOUS, PULSED, LLCurve, ll_curve_cw, ll_curve_pulsed
from .model import LaserParams, gain

__all__ = ["FitResult", "MasterCurve", "fit_eta", "read_ll_csv", "SCAN_POINTS"]

SCAN_POINTS = 20
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# net modal gain (in units of cavity loss) above which the mode counts as lasing
LASING_GAIN_FRACTION = 0.5


@dataclass(frozen=True)
class FitResult:
    eta_hat: float
    residual: float
    n_evals: int
    bracket: tuple[float, float]


class MasterCurve:
    """Model output as a function of absorbed-equivalent power ``u = eta * pump``."""

    def __init__(self, params: LaserParams, regime: str, pump_template=None,
                 u_range: tuple[float, float] = (1e-9, 1e-5), per_decade: int = 30,
                 rel_tol: float = 1e-8, workers: int | None = None):
        if regime == PULSED and not isinstance(pump_template, GaussianTrain):
            raise DomainError("a pulsed fit needs a GaussianTrain pump template")
        lo, hi = u_range
        if not 0 < lo < hi:
            raise DomainError("u_range must satisfy 0 < lo < hi")
        self.params = params.replace(eta=1.0)
        self.regime = regime
        self.pump_template = pump_template
        # one extra node on each side keeps the ends away from the interpolant edges
        n = max(int(math.ceil(per_decade * math.log10(hi / lo))), 4) + 3
        step = math.log(hi / lo) / (n - 3)
        self.u = np.exp(math.log(lo) - step + step * np.arange(n))
        if regime == PULSED:
            curve = ll_curve_pulsed(self.params, pump_template, self.u, rel_tol, workers)
        elif regime == CONTINUOUS:
            curve = ll_curve_cw(self.params, self.u, workers)
        else:
            raise DomainError(f"unknown regime {regime!r}")
        self.light = curve.light_out
        if np.any(self.light <= 0):
            raise DomainError("master curve has non-positive output; raise the lower power bound")
        self._log = PchipInterpolator(np.log(self.u), np.log(self.light), extrapolate=False)

    def log_light(self, u) -> np.ndarray:
        values = self._log(np.log(u))
        if np.any(np.isnan(values)):
            raise DomainError("requested power outside the tabulated master curve")
        return values

    def __call__(self, u) -> np.ndarray:
        return np.exp(self.log_light(u))

    def lases_at(self, u: float) -> bool:
        """Whether net modal gain reaches half the cavity loss at power ``u``."""
        p = self.params
        if self.regime == CONTINUOUS:
            n_g = steady_state(p, u).N_G
        else:
            pump = self.pump_template.with_power(u)
            n_g = float(np.max(integrate(p, pump, (-3.0 * pump.fwhm, 0.5 * pump.period)).N_G))
        return p.confinement * p.v_g * gain(n_g, p) * p.tau_p >= LASING_GAIN_FRACTION


def _usable(measured: LLCurve):
    keep = measured.light_out > 0
    x, y = measured.pump_in[keep], measured.light_out[keep]
    if x.size < 8 or x[0] <= 0:
        raise DomainError("need at least 8 points with positive pump and output")
    return x, np.log(y)


def _count_minima(r: np.ndarray) -> int:
    tol = 1e-9 * (np.max(r) - np.min(r))
    inner = (r[1:-1] < r[:-2] - tol) & (r[1:-1] < r[2:] - tol)
    return int(np.count_nonzero(inner))


def fit_eta(params_sans_eta: LaserParams, measured: LLCurve, pump_template=None,
            bracket: tuple[float, float] = (1e-4, 1.0), *, per_decade: int | None = None,
            rel_width: float = 0.01, master: MasterCurve | None = None) -> FitResult:
    """Fit ``eta`` by golden-section search over ``log eta``.

    The misfit is the RMS of ``log(measured) - log(model) - c`` where the
    offset ``c`` (the unknown output scale) takes its least-squares value,
    the mean log ratio.  The search stops when the bracket is narrower than
    ``rel_width`` in relative terms.  The master curve is tabulated at
    ``per_decade`` points per decade (default 30 for CW, 20 for the costlier
    pulsed sweeps).  Measured points with zero output are
    ignored since they carry no scale information.
    """
    eta_lo, eta_hi = map(float, bracket)
    if not 0 < eta_lo < eta_hi <= 1:
        raise DomainError(f"bracket must satisfy 0 < lo < hi <= 1, got {bracket!r}")
    x, log_y = _usable(measured)
    if master is None:
        per_decade = per_decade or (30 if measured.regime == CONTINUOUS else 20)
        master = MasterCurve(params_sans_eta, measured.regime, pump_template,
                             (eta_lo * x[0], eta_hi * x[-1]), per_decade)

    if not master.lases_at(eta_hi * x[-1]):
        raise NoLasingError(f"model does not lase anywhere in eta bracket {bracket!r}")

    evals = 0

    def misfit(log_eta: float) -> float:
        nonlocal evals
        evals += 1
        r = log_y - master.log_light(math.exp(log_eta) * x)
        r -= r.mean()
        return math.sqrt(float(r @ r) / r.size)

    a, b = math.log(eta_lo), math.log(eta_hi)
    grid = np.linspace(a, b, SCAN_POINTS)
    scan = np.array([misfit(s) for s in grid])
    if _count_minima(scan) >= 2:
        raise AmbiguousFitError(
            "misfit has several local minima over the bracket; narrow the bracket")
    k = int(np.argmin(scan))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, SCAN_POINTS - 1)]

    width = math.log1p(rel_width)
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = misfit(c), misfit(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = misfit(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = misfit(d)
    best = 0.5 * (a + b)
    return FitResult(math.exp(best), misfit(best), evals, (math.exp(a), math.exp(b)))


def read_ll_csv(path, regime: str = PULSED) -> LLCurve:
    """Read a measured LL curve with ``pump_W`` and ``light_arb`` columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = {"pump_W", "light_arb"} - set(header)
        if missing:
            raise ConfigError(f"{path}: missing column(s) {sorted(missing)} in header {header}")
        try:
            rows = [(float(r["pump_W"]), float(r["light_arb"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: non-numeric value ({exc})") from exc
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    x, y = np.array(rows).T
    return LLCurve(x, y, regime)
