"""Time integration, CW steady states and carrier bookkeeping.

Integration runs on densities scaled by the transparency density ``N_tr``
so that the solver's absolute tolerance has a meaningful size.  Pulse
windows are integrated as separate segments with a bounded step so that
the solver never steps over a pump pulse; the output is then sampled from
the solver's dense interpolant on a grid fine enough to resolve the pulse.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate as spi
from scipy import optimize

from .errors import (ConvergenceError, DomainError, NumericError, ResolutionError,
                     StiffnessError)
from .excitation import CW, Chopped, GaussianTrain, pump_power_at
from .model import GAIN_FLOOR, LaserParams, RateState, gain, jacobian

__all__ = [
    "Trajectory",
    "EnergyLedger",
    "integrate",
    "rk4_integrate",
    "steady_state",
    "steady_state_bracketed",
    "steady_state_residual",
    "energy_ledger",
    "pulse_span",
    "params_hash",
    "write_trajectory_csv",
    "SAMPLES_PER_FWHM",
]

SAMPLES_PER_FWHM = 20
# sampled on the fine grid after every pulse centre
DEFAULT_RESPONSE_WINDOW = 300e-12
CSV_COLUMNS = ("t_s", "N_E_per_m3", "N_G_per_m3", "P_per_m3", "L_out_W")


def params_hash(params: LaserParams, pump=None) -> str:
    payload = {"params": asdict(params), "pump": repr(pump)}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Trajectory:
    """Sampled time evolution of the rate equations.

    Arrays share one index; ``L_out`` is the collected output power.
    """

    t: np.ndarray
    N_E: np.ndarray
    N_G: np.ndarray
    P: np.ndarray
    L_out: np.ndarray
    params_hash: str = ""
    clamp_events: int = 0
    nfev: int = 0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise DomainError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> RateState:
        return RateState(float(self.t[i]), float(self.N_E[i]), float(self.N_G[i]),
                         float(self.P[i]))

    @property
    def samples(self) -> list[RateState]:
        return [self[i] for i in range(len(self))]

    @property
    def final(self) -> RateState:
        return self[-1]

    def window(self, t0: float, t1: float) -> "Trajectory":
        keep = (self.t >= t0) & (self.t <= t1)
        return Trajectory(self.t[keep], self.N_E[keep], self.N_G[keep], self.P[keep],
                          self.L_out[keep], self.params_hash, self.clamp_events, self.nfev)

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in zip(traj.t, traj.N_E, traj.N_G, traj.P, traj.L_out):
            writer.writerow([repr(float(v)) for v in row])


def pulse_span(pump: GaussianTrain, n_periods: int = 1) -> tuple[float, float]:
    """Time span covering ``n_periods`` pulses, starting on the first pulse's leading edge."""
    start = -3.0 * pump.fwhm
    return start, start + n_periods * pump.period


def _scaled_rhs(params: LaserParams, pump):
    """Right-hand side on densities scaled by N_tr, as fast scalar code."""
    n_tr = params.N_tr
    pump_scaled = params.pump_rate_per_watt / n_tr
    a_relax = 1.0 / params.tau_relax
    a_e = a_relax + 1.0 / params.tau_nr_E
    k_g = params.se_rate + 1.0 / params.tau_nr_G
    auger = params.C_A * n_tr * n_tr
    vg, g0 = params.v_g, params.g0
    gam = params.confinement
    inv_tp = 1.0 / params.tau_p
    se_cav = gam * params.se_cavity_rate
    log, floor = math.log, GAIN_FLOOR
    power = pump_power_at

    def f(t, y):
        e, n, p = y
        g = g0 * log(n if n > floor else floor)
        stim = vg * g * p
        return [pump_scaled * power(pump, t) - a_e * e,
                a_relax * e - k_g * n - auger * n * n * n - stim,
                gam * stim - inv_tp * p + se_cav * n]

    def jac(t, y):
        return jacobian(y[0] * n_tr, y[1] * n_tr, y[2] * n_tr, params)

    return f, jac


def _segments(pump, t0: float, t1: float, response_window: float):
    """Split [t0, t1] into (start, end, max_step, sample_dt) pieces."""
    if isinstance(pump, GaussianTrain):
        hw, dt = pump.half_width, pump.fwhm / SAMPLES_PER_FWHM
        edges = []
        k0 = max(math.floor((t0 - hw) / pump.period), 0)
        k = k0
        while k * pump.period - hw < t1:
            c = k * pump.period
            edges.append((c - hw, c + hw, pump.sigma, dt))
            edges.append((c + hw, c + response_window, math.inf, dt))
            k += 1
        pieces = []
        cursor = t0
        for a, b, max_step, sample_dt in edges:
            a, b = max(a, t0), min(b, t1)
            if b <= cursor:
                continue
            if a > cursor:
                pieces.append((cursor, a, math.inf, None))
            a = max(a, cursor)
            pieces.append((a, b, max_step, sample_dt))
            cursor = b
        if cursor < t1:
            pieces.append((cursor, t1, math.inf, None))
        return pieces
    if isinstance(pump, Chopped):
        cuts = {t0, t1}
        k = math.floor(t0 / pump.period)
        while k * pump.period < t1:
            for edge in (k * pump.period, k * pump.period + pump.on_duration):
                if t0 < edge < t1:
                    cuts.add(edge)
            k += 1
        cuts = sorted(cuts)
        return [(a, b, math.inf, None) for a, b in zip(cuts[:-1], cuts[1:])]
    return [(t0, t1, math.inf, None)]


def integrate(params: LaserParams, pump, t_span: tuple[float, float],
              init: RateState | None = None, rel_tol: float = 1e-8, *,
              method: str = "Radau", sample_dt: float | None = None,
              response_window: float = DEFAULT_RESPONSE_WINDOW) -> Trajectory:
    """Integrate the rate equations over ``t_span`` with adaptive error control.

    Output samples are the solver's own steps plus a uniform grid of
    ``fwhm/20`` spacing from each pump pulse's leading edge until
    ``response_window`` after its centre.  ``sample_dt`` adds a uniform grid
    over the whole span.  Negative samples produced by round-off are set to
    zero and counted in ``clamp_events``.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise DomainError(f"degenerate time span {t_span!r}")
    if not 1e-12 <= rel_tol <= 1e-3:
        raise DomainError(f"rel_tol must lie in [1e-12, 1e-3], got {rel_tol!r}")

    n_tr = params.N_tr
    if init is None:
        y = np.zeros(3)
    else:
        y = init.as_array() / n_tr

    # carrier density the pump can build up in one pump-level lifetime
    tau_e = 1.0 / (1.0 / params.tau_relax + 1.0 / params.tau_nr_E)
    scale = max(float(np.max(y)), params.pump_rate_per_watt * pump.peak_power * tau_e / n_tr,
                1e-30)
    atol_n = 1e-3 * rel_tol * scale
    atol_p = atol_n * params.confinement * params.se_cavity_rate * params.tau_p
    atol = np.array([atol_n, atol_n, atol_p])

    f, jac = _scaled_rhs(params, pump)
    times, states = [np.array([t0])], [y[:, None].copy()]
    nfev = 0
    for a, b, max_step, seg_dt in _segments(pump, t0, t1, response_window):
        solver_kw = dict(method=method, rtol=rel_tol, atol=atol, dense_output=True)
        if method in ("LSODA", "Radau", "BDF"):
            solver_kw["jac"] = jac
        if math.isfinite(max_step):
            solver_kw["max_step"] = max_step
        sol = spi.solve_ivp(f, (a, b), y, **solver_kw)
        nfev += sol.nfev
        if sol.status != 0:
            state = sol.y[:, -1] * n_tr
            if "step size" in sol.message.lower():
                raise StiffnessError(f"integration stalled at t={sol.t[-1]!r}: {sol.message}",
                                     state=state, t=sol.t[-1])
            raise NumericError(f"integration failed at t={sol.t[-1]!r}: {sol.message}")
        seg_t = sol.t[1:]
        grids = [seg_t]
        for dt in (seg_dt, sample_dt):
            if dt:
                grids.append(np.arange(a, b, dt)[1:])
        seg_t = np.unique(np.concatenate(grids))
        seg_y = sol.sol(seg_t)
        seg_y[:, -1] = sol.y[:, -1]
        times.append(seg_t)
        states.append(seg_y)
        y = sol.y[:, -1].copy()
        if not np.all(np.isfinite(y)):
            raise NumericError(f"non-finite state at t={b!r}")
        y = np.maximum(y, 0.0)

    t = np.concatenate(times)
    Y = np.concatenate(states, axis=1) * n_tr
    if not np.all(np.isfinite(Y)):
        raise NumericError("non-finite value in trajectory")
    negative = Y < 0
    clamp_events = int(np.count_nonzero(negative))
    Y[negative] = 0.0
    return Trajectory(t, Y[0], Y[1], Y[2], params.light_out(Y[2]),
                      params_hash(params, pump), clamp_events, nfev)


def rk4_integrate(params: LaserParams, pump, t_span: tuple[float, float], dt: float,
                  init: RateState | None = None) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta; reference solution only."""
    t0, t1 = map(float, t_span)
    n_steps = int(math.ceil((t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / n_steps
    f, _ = _scaled_rhs(params, pump)
    y = [0.0, 0.0, 0.0] if init is None else list(init.as_array() / params.N_tr)
    out = np.empty((n_steps + 1, 3))
    out[0] = y
    t = t0
    for i in range(1, n_steps + 1):
        k1 = f(t, y)
        k2 = f(t + h / 2, [y[j] + h / 2 * k1[j] for j in range(3)])
        k3 = f(t + h / 2, [y[j] + h / 2 * k2[j] for j in range(3)])
        k4 = f(t + h, [y[j] + h * k3[j] for j in range(3)])
        y = [y[j] + h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]) for j in range(3)]
        t = t0 + i * h
        out[i] = y
    Y = out.T * params.N_tr
    return Trajectory(t0 + h * np.arange(n_steps + 1), Y[0], Y[1], Y[2],
                      params.light_out(Y[2]), params_hash(params, pump), 0, 4 * n_steps)


# --- steady state -----------------------------------------------------------

def _residual_scaled(x, params: LaserParams, cw_power: float):
    """Residuals and per-equation magnitude scales, densities in units of N_tr."""
    n_tr = params.N_tr
    e, n, p = x
    g = gain(n * n_tr, params)
    terms = (
        (params.pump_rate_per_watt * cw_power / n_tr, -e / params.tau_relax,
         -e / params.tau_nr_E),
        (e / params.tau_relax, -n * params.se_rate, -n / params.tau_nr_G,
         -params.C_A * n_tr * n_tr * n ** 3, -params.v_g * g * p),
        (params.confinement * params.v_g * g * p, -p / params.tau_p,
         params.confinement * params.se_cavity_rate * n),
    )
    F = np.array([sum(row) for row in terms])
    S = np.array([sum(abs(v) for v in row) for row in terms])
    return F, S


def _newton(x, params, cw_power, tol, max_iter=100):
    n_tr = params.N_tr
    polishing = 2
    for _ in range(max_iter):
        F, S = _residual_scaled(x, params, cw_power)
        merit = np.max(np.abs(F) / S)
        if merit <= tol:
            polishing -= 1
            if polishing < 0 or merit < 1e-14:
                return x, merit
        J = jacobian(*(x * n_tr), params)
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return x, merit
        step = 1.0
        while step > 1e-12:
            trial = x + step * dx
            if np.all(trial > 0):
                Ft, St = _residual_scaled(trial, params, cw_power)
                if np.max(np.abs(Ft) / St) < merit:
                    x = trial
                    break
            step *= 0.5
        else:
            return x, merit
    F, S = _residual_scaled(x, params, cw_power)
    return x, np.max(np.abs(F) / S)


def steady_state_bracketed(params: LaserParams, cw_power: float) -> RateState:
    """CW steady state by reduction to one bracketed equation.

    ``N_E`` follows directly from the pump and ``dP/dt = 0`` gives ``P`` as a
    function of ``N_G`` below the gain-clamping density ``N_cl``.  The
    remaining carrier balance is solved for ``s = ln(N_cl / N_G) > 0``, which
    keeps the cavity net loss ``Gamma*v_g*g0*s`` free of cancellation.
    """
    if cw_power < 0:
        raise DomainError("cw_power must be non-negative")
    if cw_power == 0:
        return RateState(math.inf, 0.0, 0.0, 0.0)
    n_e = params.pump_rate_per_watt * cw_power / (1 / params.tau_relax + 1 / params.tau_nr_E)
    feed = n_e / params.tau_relax
    gam, vg = params.confinement, params.v_g
    log_clamp = math.log(params.N_tr) + 1.0 / (gam * vg * params.g0 * params.tau_p)
    s_floor = log_clamp - math.log(GAIN_FLOOR * params.N_tr)

    def state(s):
        n = math.exp(log_clamp - s)
        net_loss = gam * vg * params.g0 * min(s, s_floor)
        p = gam * params.se_cavity_rate * n / net_loss
        return n, p

    def balance(s):
        n, p = state(s)
        return (feed - n * params.se_rate - n / params.tau_nr_G - params.C_A * n ** 3
                - vg * gain(n, params) * p) / feed

    lo = 1e-300
    while balance(lo) > 0:
        lo *= 1e10
        if lo > 1.0:
            raise ConvergenceError("could not bracket the steady state")
    hi = 1.0
    while balance(hi) < 0:
        hi *= 2.0
        if hi > 1e4:
            raise ConvergenceError("could not bracket the steady state")
    s = optimize.brentq(balance, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=1000)
    n, p = state(s)
    return RateState(math.inf, n_e, n, p)


def steady_state(params: LaserParams, cw_power: float, *, tol: float = 1e-9,
                 relax_time: float = 5e-9) -> RateState:
    """CW operating point by damped Newton, seeded from a relaxation run.

    Convergence requires every equation's residual to fall below ``tol``
    times the sum of magnitudes of that equation's terms.  If Newton stalls
    the one-dimensional bracketed reduction is used and polished.
    """
    if not (math.isfinite(cw_power) and cw_power >= 0):
        raise DomainError(f"cw_power must be non-negative, got {cw_power!r}")
    if cw_power == 0:
        return RateState(math.inf, 0.0, 0.0, 0.0)

    seed = integrate(params, CW(cw_power), (0.0, relax_time), rel_tol=1e-6).final
    x0 = np.maximum(seed.as_array() / params.N_tr, 1e-300)
    x, merit = _newton(x0, params, cw_power, tol)
    if merit > tol:
        fallback = steady_state_bracketed(params, cw_power)
        x, merit = _newton(fallback.as_array() / params.N_tr, params, cw_power, tol)
    if merit > tol or not np.all(np.isfinite(x)):
        raise ConvergenceError(
            f"steady state did not converge at {cw_power!r} W (residual {merit:.3g})")
    x = x * params.N_tr
    return RateState(math.inf, float(x[0]), float(x[1]), float(x[2]))


def steady_state_residual(params: LaserParams, cw_power: float, state: RateState) -> float:
    """Largest relative residual of the three balance equations at ``state``."""
    x = state.as_array() / params.N_tr
    F, S = _residual_scaled(x, params, cw_power)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(S > 0, np.abs(F) / S, 0.0)
    return float(np.max(rel))


# --- carrier bookkeeping ----------------------------------------------------

@dataclass(frozen=True)
class EnergyLedger:
    """Where injected carriers went, in carrier counts.

    ``stimulated_photons_emitted`` is net of stimulated absorption.
    """

    injected_carriers: float = 0.0
    stimulated_photons_emitted: float = 0.0
    se_cavity: float = 0.0
    se_other: float = 0.0
    nr_losses: float = 0.0
    auger_losses: float = 0.0
    stored_delta: float = 0.0

    @property
    def sinks(self) -> float:
        return (self.stimulated_photons_emitted + self.se_cavity + self.se_other
                + self.nr_losses + self.auger_losses)

    @property
    def closure_residual(self) -> float:
        """Relative mismatch between injected carriers and their destinations."""
        total = self.sinks + self.stored_delta
        scale = max(abs(self.injected_carriers), abs(self.stored_delta) + abs(self.sinks))
        return 0.0 if scale == 0 else abs(self.injected_carriers - total) / scale

    @property
    def stimulated_fraction(self) -> float:
        """Share of all carrier losses that went into stimulated emission."""
        return 0.0 if self.sinks == 0 else self.stimulated_photons_emitted / self.sinks


def _check_resolution(traj: Trajectory, pump) -> None:
    if not isinstance(pump, GaussianTrain) or len(traj) < 2:
        return
    t = traj.t
    k = max(math.ceil(t[0] / pump.period), 0)
    while k * pump.period <= t[-1]:
        c = k * pump.period
        inside = t[(t >= c - pump.fwhm) & (t <= c + pump.fwhm)]
        if c - pump.fwhm >= t[0] and c + pump.fwhm <= t[-1]:
            spacing = np.diff(np.concatenate([[c - pump.fwhm], inside, [c + pump.fwhm]]))
            if inside.size < 2 or spacing.max() > pump.fwhm / 10:
                raise ResolutionError(
                    f"pulse at t={c!r} is sampled more coarsely than fwhm/10")
        k += 1


def energy_ledger(traj: Trajectory, params: LaserParams, pump,
                  window: tuple[float, float] | None = None) -> EnergyLedger:
    """Integrate every source and sink of lasing-level carriers over ``traj``."""
    _check_resolution(traj, pump)
    if window is not None:
        traj = traj.window(*window)
    if len(traj) < 2:
        return EnergyLedger()
    t, n_e, n_g, p = traj.t, traj.N_E, traj.N_G, traj.P
    va = params.V_a
    l_in = np.asarray(pump_power_at(pump, t), dtype=float)
    trap = spi.trapezoid
    return EnergyLedger(
        injected_carriers=va * trap(params.pump_rate_per_watt * l_in, t),
        stimulated_photons_emitted=va * trap(params.v_g * gain(n_g, params) * p, t),
        se_cavity=va * trap(params.se_cavity_rate * n_g, t),
        se_other=va * trap((params.se_rate - params.se_cavity_rate) * n_g, t),
        nr_losses=va * trap(n_e / params.tau_nr_E + n_g / params.tau_nr_G, t),
        auger_losses=va * trap(params.C_A * n_g ** 3, t),
        stored_delta=va * ((n_e[-1] + n_g[-1]) - (n_e[0] + n_g[0])),
    )
