"""
Continuous-wave thresholds from the pulsed calibration
======================================================

The pulsed calibration fixes the absorbed fraction for a large pump spot.
Rescaling by spot area predicts a smaller-spot CW threshold.  The drift-corrected
absorption gives a lower threshold still.
"""

import numpy as np

from nanolase import LT, extract_threshold, ll_curve_cw, spot_scaled_eta

eta_spot = spot_scaled_eta(1.3e-3, 4.0e-6, 1.2e-6)
print(f"spot-scaled eta  {eta_spot:.3e}")

for label, eta, guess in (("spot scaled", eta_spot, 35e-6), ("drift corrected", 0.055, 9e-6)):
    params = LT.params("cw", eta=eta)
    # steady states over 0.15 to 4.6 times the expected threshold
    ll = ll_curve_cw(params, np.linspace(0.15, 4.6, 40) * guess)
    print(f"{label:16s} eta {eta:.3e}  threshold {extract_threshold(ll).threshold * 1e6:.1f} uW")
