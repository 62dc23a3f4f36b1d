"""Locating quasi-normal eigenvalues of layered cavities.

The characteristic function F(z; B) is entire; its upper-half-plane zeros
are the resonances.  For a constant medium the spectrum is known in closed
form, which makes a nice first check of the contour-counting machinery.

Run:  python3 demos/demo_spectrum.py
"""
import numpy as np

from qnmopt import (AdmissibleBounds, PiecewiseStructure, SpectralWindow,
                    charF_many, constant, constant_spectrum, locate,
                    winding_count)

# --- constant media: golden formulas ----------------------------------------

window = SpectralWindow(0.1, 12.0, 0.05, 3.0)
for b in (0.25, 1.0, 4.0, 9.0):
    evs = locate(constant(b), window)
    formula = constant_spectrum(b, window)
    print(f"B = {b:<5}: {len(evs)} eigenvalues found, "
          f"{len(formula)} from the closed form")
    for ev, z in zip(evs, formula):
        print(f"    {ev.kappa:.12f}   (formula {z:.12f}, "
              f"|F| = {ev.residual:.1e})")

# the Q factor |Re k| / (2 |Im k|) of the best B = 4 mode in the window
evs = locate(constant(4.0), window)
best = max(evs, key=lambda ev: abs(ev.kappa.real) / ev.kappa.imag)
print(f"\nbest Q of constant B = 4: "
      f"{abs(best.kappa.real) / (2 * best.kappa.imag):.2f} at {best.kappa:.6f}")

# --- a two-layer cavity vs a brute scan --------------------------------------

bounds = AdmissibleBounds(1.0, 4.0)
B = PiecewiseStructure((0.0, 0.5, 1.0), (4.0, 1.0), bounds)
w = SpectralWindow(0.5, 6.0, 0.05, 2.0)
print(f"\ntwo-layer cavity: winding count = {winding_count(B, w)}")
for ev in locate(B, w):
    print(f"    {ev.kappa:.12f}  multiplicity {ev.multiplicity}")

# compare against the raw |F| landscape (the kind of scan one would eyeball)
xs = np.linspace(w.re_min, w.re_max, 120)
ys = np.linspace(w.im_min, w.im_max, 40)
F = np.abs(charF_many(xs[None, :] + 1j * ys[:, None], B))
i, j = np.unravel_index(np.argmin(F), F.shape)
print(f"grid minimum of |F| near {xs[j]:.3f} + {ys[i]:.3f}i "
      f"(value {F[i, j]:.2e})")
