"""
Pulsed light-in light-out curve at 4 K
======================================

Sweep the average pump power of a 3.5 ps, 13 ns pulse train and locate the
lasing threshold with a two-segment fit.
"""

import numpy as np

from nanolase import LT, GaussianTrain, extract_threshold, ll_curve_pulsed, peak_from_average

params = LT.params("pulsed")
template = GaussianTrain(0.0, 3.5e-12, 13e-9)
powers = np.linspace(1e-6, 30e-6, 40)

# each point is a period-averaged output after one warm-up period
ll = ll_curve_pulsed(params, template, powers)
fit = extract_threshold(ll)

print(f"threshold      {fit.threshold * 1e6:.2f} uW average")
print(f"peak power     {peak_from_average(fit.threshold, 3.5e-12, 13e-9) * 1e3:.1f} mW")
print(f"slope ratio    {fit.slope_above / fit.slope_below:.0f}")
print(f"fit residual   {fit.residual:.3f}")

###############################################################################
# Every fifth point of the curve.
for x, y in ll.points[::5]:
    print(f"{x * 1e6:7.2f} uW  {y:.3e} W")
