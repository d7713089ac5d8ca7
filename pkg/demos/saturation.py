"""Final ensemble width against the disorder strength ``1/tau``.

Weak disorder leaves the packet almost untouched; past an onset the width
stops depending on ``tau`` and sits on a plateau.

Run with ``python demos/saturation.py`` (about a minute).
"""
import numpy as np

from qprice.continuum import DriftDiffusionField, GridSpec, WavePacket
from qprice.ensemble_stats import ModelSetup, saturation_scan
from qprice.evolution import EvolutionConfig

dx = 1e-3
setup = ModelSetup(
    GridSpec.centred(0.1, dx),
    WavePacket(w0=2 * dx),
    DriftDiffusionField(gamma_sigma=dx ** 2, mode="disordered"),
    EvolutionConfig(tau=1.0, dt=1.0, n_steps=30),
)
strength = 10 ** np.arange(-1.5, 3.6, 0.5)
scan = saturation_scan(setup, 1 / strength, 16, seed=7)

print("   1/tau    final width")
for inv, w in zip(scan.inverse_tau, scan.final_width):
    mark = "  <- onset" if np.isclose(inv, 1 / scan.onset_tau) else ""
    print(f"{inv:9.3g}   {w:.5f}{mark}")
print(f"plateau {scan.plateau:.5f}")
