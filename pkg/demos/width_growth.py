"""Spread of the price distribution under homogeneous and disordered fields.

With a homogeneous field each member is a shifted Gaussian and the ensemble
width follows a closed form.  Node-by-node random diffusion instead breaks
each member into a speckled distribution whose width grows slowly.

Run with ``python demos/width_growth.py``.
"""
import numpy as np

from qprice.continuum import DriftDiffusionField, GridSpec, WavePacket, ensemble_width
from qprice.ensemble_stats import ModelSetup, ensemble_widths, run_ensemble
from qprice.evolution import EvolutionConfig

dx = 0.002
grid = GridSpec.centred(0.4, dx)
packet = WavePacket(w0=0.02)
cfg = EvolutionConfig(tau=1.0, dt=1.0, n_steps=30, stride=5)

# %% Homogeneous field against its closed form
field = DriftDiffusionField(mu_sigma=0.002, gamma0=4e-5)
res = run_ensemble(ModelSetup(grid, packet, field, cfg), 200, seed=0)
w = ensemble_widths(res)
closed = [ensemble_width(0.02, 0.002, 4e-5, t) for t in res.times]
print("homogeneous   t   simulated   closed form")
for t, a, b in zip(res.times, w, closed):
    print(f"          {t:5.0f}   {a:.5f}     {b:.5f}")

# %% Disordered diffusion
field = DriftDiffusionField(gamma_sigma=dx ** 2, mode="disordered")
res = run_ensemble(ModelSetup(grid, packet, field, cfg), 50, seed=0)
print("\ndisordered    t   ensemble width")
for t, a in zip(res.times, ensemble_widths(res)):
    print(f"          {t:5.0f}   {a:.5f}")
print(f"median speckle contrast of the final member distributions: "
      f"{np.median(res.final_contrast):.3f}")
