"""Cross-checking a resonance against the damped wave equation.

A mode with eigenvalue kappa oscillates at Re kappa and decays at Im kappa;
its energy therefore decays at 2 Im kappa.  The leapfrog simulation with
the radiating end reproduces that rate, and the discrepancy shrinks under
grid refinement.

Run:  python3 demos/demo_timedomain.py
"""
import math

import numpy as np

from qnmopt import AdmissibleBounds, constant, excite_and_fit, simulate

bounds = AdmissibleBounds(1.0, 4.0)

# --- transparency sanity: B = 1 passes a pulse without reflection -------------

B1 = constant(1.0, bounds)
m = 2048
xs = np.linspace(0.0, 1.0, m + 1)
pulse = np.exp(-((xs - 0.35) / 0.07) ** 2)
dpulse = -2.0 * (xs - 0.35) / 0.07 ** 2 * pulse
sim = simulate(B1, pulse, -dpulse, 3.0, m)
print(f"B = 1 pulse: E(T)/E(0) = {sim.energies[-1] / sim.energies[0]:.2e} "
      "(the boundary is exactly matched)")

# --- mode decay for B = 4 -------------------------------------------------------

B4 = constant(4.0, bounds)
kappa = math.pi + 1j * math.log(3.0) / 4.0
print(f"\nmode decay of B = 4 at kappa = {kappa:.6f} "
      f"(expected energy rate {2 * kappa.imag:.6f}):")
for m in (1024, 2048, 4096):
    fit = excite_and_fit(B4, kappa, 15.0, m)
    print(f"   M = {m:5d}: fitted rate {fit.beta:.6f} "
          f"(off by {abs(fit.beta / fit.expected - 1) * 100:.3f}%)")
