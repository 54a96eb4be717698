"""
Pulse response seen through a streak camera
===========================================

Integrate one excitation pulse and convolve the output with a 3.2 ps
Gaussian instrument response.  With the default parameters both presets give
output pulses of a few picoseconds, close to the instrument limit.
"""

from nanolase import LT, RT, GaussianTrain, pulse_response

for name, params, power in (("4 K", LT.params("pulsed"), 13e-6),
                            ("300 K", RT.params("pulsed"), 136e-6)):
    m = pulse_response(params, GaussianTrain(power, 3.4e-12, 13e-9), irf_fwhm=3.2e-12)
    print(f"{name:6s} fwhm {m.fwhm * 1e12:5.2f} ps  rise {m.rise_time_10_90 * 1e12:5.2f} ps  "
          f"fall {m.fall_time_90_10 * 1e12:5.2f} ps  delay {m.peak_delay * 1e12:5.2f} ps")

###############################################################################
# Without the instrument response, a 1 ps pump gives a sub-2 ps output pulse,
# and faster intraband relaxation narrows it further.
pump = GaussianTrain(136e-6, 1e-12, 13e-9)
for tau in (0.8e-12, 0.2e-12):
    fwhm = pulse_response(RT.params("pulsed", tau_relax=tau), pump).fwhm
    print(f"tau_relax {tau * 1e12:.1f} ps  fwhm {fwhm * 1e12:.2f} ps")
