"""Rate-equation simulator for quantum-well photonic-crystal nanocavity lasers."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .model import (LT, PRESETS, RT, EnvironmentPreset, LaserParams, RateState,  # noqa: E402
                    drift_length, gain, peak_from_average, photon_lifetime, rhs,
                    spot_scaled_eta)
from .excitation import CW, Chopped, GaussianTrain, pump_energy_per_period, pump_power_at  # noqa: E402
from .dynamics import (EnergyLedger, Trajectory, energy_ledger, integrate,  # noqa: E402
                       rk4_integrate, steady_state)
from .experiments import (LLCurve, PulseMetrics, ThresholdFit, auger_fraction,  # noqa: E402
                          convolve_irf, extract_threshold, ll_curve_cw, ll_curve_pulsed,
                          measure_fwhm, pulse_response)
from .fit import FitResult, fit_eta, read_ll_csv  # noqa: E402
