"""
Fitting the absorbed fraction to a measured curve
=================================================

The model sees the absorbed fraction only through the product with pump
power, so one master curve serves every candidate value.  The output scale
is a free nuisance parameter.
"""

from pathlib import Path

from nanolase import LT, AmbiguousFitError, GaussianTrain, fit_eta, read_ll_csv

data = Path(__file__).resolve().parent.parent / "tests" / "data" / "lt_pulsed_ll_approx.csv"
measured = read_ll_csv(data)
template = GaussianTrain(0.0, 3.5e-12, 13e-9)
params = LT.params("pulsed")

try:
    fit_eta(params, measured, template, (5e-4, 5e-3))
except AmbiguousFitError as exc:
    print(f"wide bracket: {exc}")

res = fit_eta(params, measured, template, (7e-4, 2.5e-3))
print(f"eta {res.eta_hat:.3e}  log-rms misfit {res.residual:.3f}  evaluations {res.n_evals}")
