"""Perturbing a double eigenvalue: Puiseux branches and the escape step.

At a multiplicity-2 eigenvalue the gradient formula fails; the eigenvalue
splits along two branches ~ +-c1 sqrt(zeta).  This demo builds a two-layer
structure with a genuine double eigenvalue, measures the splitting exponent
and leading coefficient, and then asks the escape logic for a perturbation
whose branch points straight down (the move a decay-rate minimizer needs).

Run:  python3 demos/demo_splitting.py
"""
import cmath
import math

from qnmopt import (GridStructure, find_double_eigenvalue, multiplicity,
                    multiple_eigenvalue_escape, splitting_probe)

# damped Newton on (interface, second value, kappa) from a frozen seed
B, kappa = find_double_eigenvalue((0.7125, 4.0, 1.4792), 4.44244 + 1.03017j)
print(f"double eigenvalue at {kappa:.10f}")
print(f"   interface {B.breakpoints[1]:.8f}, layer values {B.values}")
print(f"   circle count: multiplicity = {multiplicity(B, kappa, 0.05)}")

# --- measure the splitting law --------------------------------------------------

n = 16
direction = GridStructure(tuple(1.0 if i < n // 2 else 0.0 for i in range(n)),
                          B.bounds)
zetas = [1e-4, 1e-5, 1e-6, 1e-7]
probe = splitting_probe(B, kappa, 2, direction, zetas)
print(f"\nsplitting under B + zeta * (bump on [0, 1/2]):")
print(f"   fitted exponent {probe.fitted_exponent:.5f} (theory: 1/2)")
print(f"   c1 predicted {probe.c1_predicted:.6f}")
print(f"   c1 fitted    {probe.c1_fitted:.6f}")
for zeta, branches in zip(probe.zeta_values, probe.branch_points):
    spread = abs(cmath.phase((branches[0] - kappa) / (branches[1] - kappa)))
    print(f"   zeta = {zeta:.0e}: branch gap angle {spread:.4f} "
          f"(antipodal = {math.pi:.4f})")

# --- the escape direction -------------------------------------------------------

direction, zeta, branches = multiple_eigenvalue_escape(B, kappa, 2, B.bounds)
down = min(branches, key=lambda z: z.imag)
print(f"\nescape step at zeta = {zeta:.2e}:")
for z in branches:
    print(f"   branch {z:.8f} (arg {cmath.phase(z - kappa):+.4f})")
print(f"   downward branch lowers Im kappa by {kappa.imag - down.imag:.2e}")
