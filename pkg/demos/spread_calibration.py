"""From OHLC bars to a spread curve, its fit and a calibrated model.

Bars come from a synthetic random walk with four trades per one-minute bar,
so the fitted volatility has a known answer.

Run with ``python demos/spread_calibration.py`` (a few minutes).
"""
import numpy as np

from qprice.calibration import (CalibrationConfig, calibrate_model, empirical_spread_curve,
                                fit_spread_curve, random_walk_bars)
from qprice.continuum import traditional_volatility

bars = random_walk_bars(390 * 20, 0.00066, np.random.default_rng(0))

# %% Spread curve and its two-parameter fit
horizons = [1, 2, 5, 10, 20, 50, 100, 200, 390]
curve = empirical_spread_curve(bars, horizons)
fit = fit_spread_curve(curve)
for h, w in zip(curve.horizons, curve.widths):
    print(f"horizon {h:4d}  width {w:.5f}")
print(f"w_dt {fit.w_dt:.5f}, beta*eps {fit.beta_eps:.5f}, rms {fit.rms_residual:.2e}")
# one bar is 1/390 of a trading day
print(f"implied daily width {traditional_volatility(fit.beta_eps, 1 / 390):.4f}")

# %% Full calibration
model = calibrate_model(bars, CalibrationConfig(n_draws=20_000, ensemble_size=8,
                                                horizon_steps=10), seed=0)
print(f"w0 {model.w0:.5f}  sigma_mu {model.sigma_mu:.3g}  sigma_gamma {model.sigma_gamma:.3g}"
      f"  tau {model.tau:.3g} s  dx {model.dx:.3g}")
