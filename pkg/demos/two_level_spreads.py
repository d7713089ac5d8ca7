"""Two-level quotes: spread statistics and a short mid-price path.

Run with ``python demos/two_level_spreads.py``.
"""
import numpy as np

from qprice.operator_core import TwoLevelParams, spread_sample, two_level_path

rng = np.random.default_rng(1)

# %% Spread of a zero-mean operator follows a Rayleigh law
p = TwoLevelParams(sigma=0.01, xi1=0.02, kappa1=0.02)
s = spread_sample(p, 100_000, rng)
print(f"mean spread {s.mean():.5f}  (Rayleigh mean {0.02 * np.sqrt(np.pi / 2):.5f})")

# %% A biased coupling moves the spread away from zero
p_bias = TwoLevelParams(sigma=0.01, xi1=0.005, kappa0=0.03, kappa1=0.005)
s = spread_sample(p_bias, 100_000, rng)
print(f"biased: mean {s.mean():.5f}, std {s.std():.5f}")

# %% Iterated quotes
mids, spreads = two_level_path(100.0, p_bias, 20, rng)
for k in range(0, 21, 5):
    print(f"step {k:2d}  mid {mids[k]:9.4f}  spread {spreads[k]:.4f}")
