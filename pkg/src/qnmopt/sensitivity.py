"""Derivatives of quasi-normal eigenvalues with respect to the medium.

A simple eigenvalue kappa(B) is analytic in B with directional derivative

    dkappa(B_D) = - kappa^2 int phi^2 B_D / (2 kappa int phi^2 B - i phi^2(1)),

realized here as a per-cell density (the adjoint gradient of the optimizer).
Multiple eigenvalues instead split along r Puiseux branches ~ c1 zeta^(1/r);
splitting_probe measures that exponent and leading coefficient against the
formula, and find_double_eigenvalue constructs a two-layer double root used
as the test fixture for all of it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (BranchCountMismatch, InputError, NearMultiple,
                     NoConvergence, NotAtRoot)
from .field import charF, dzF, overlap_integrals, phi2_cell_integrals
from .medium import AdmissibleBounds, GridStructure, PiecewiseStructure
from .spectrum import newton_refine

__all__ = [
    "GradientDensity", "SplittingProbe", "dBF_direction",
    "eigenvalue_gradient", "splitting_probe", "find_double_eigenvalue",
    "dzF_higher", "simple_root_floor",
]

_ROOT_TOL = 1e-8   # |F| above this is "not at a root"


@dataclass(frozen=True)
class GradientDensity:
    """Cell-averaged gradient density g of the tracked eigenvalue.

    The directional derivative along a cellwise-constant direction d is
    sum_i g[i] d[i] / N (exact: the per-cell integrals of phi^2 are closed
    form).  denom_abs records |D| with D = 2 kappa int phi^2 B - i phi^2(1).
    """

    kappa: complex
    g: tuple
    denom_abs: float

    @property
    def n_cells(self) -> int:
        return len(self.g)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.g, dtype=complex)

    def directional(self, direction) -> complex:
        d = direction.as_array() if isinstance(direction, GridStructure) \
            else np.asarray(direction, dtype=float)
        if len(d) != self.n_cells:
            raise InputError("direction grid does not match gradient grid")
        return complex(np.dot(self.as_array(), d) / self.n_cells)


def _require_root(B, kappa: complex, tol: float = _ROOT_TOL) -> None:
    r = abs(charF(kappa, B))
    if r >= tol:
        raise NotAtRoot(f"|F({kappa})| = {r:.3e} >= {tol:.0e}")


def dBF_direction(B, kappa: complex, direction: GridStructure) -> complex:
    """Directional derivative of F with respect to the medium at a root.

    Equals kappa [-kappa psi(1) + i psi'(1)] * int phi^2 d; linear in the
    direction.
    """
    _require_root(B, kappa)
    bd, _, _ = overlap_integrals(B, kappa)
    cells = phi2_cell_integrals(B, kappa, direction.edges)
    w = complex(np.dot(cells, direction.as_array()))
    return kappa * (-kappa * bd.psi1 + 1j * bd.dpsi1) * w


def dzF_higher(B, kappa: complex, order: int,
               step: float | None = None) -> complex:
    """d^order F / dz^order from central differences of the exact dzF.

    order >= 2; one layer of numerical differentiation on top of the exact
    first derivative keeps the error near 1e-8 for order 2.
    """
    if order < 2:
        raise InputError("use dzF for the first derivative")
    h = step if step is not None else 1e-4 * (1.0 + abs(kappa))
    if order == 2:
        # 5-point first derivative of dzF
        vals = [dzF(kappa + k * h, B) for k in (-2, -1, 1, 2)]
        return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    m = order - 1  # central difference of dzF of order m
    offsets = [m / 2.0 - j for j in range(m + 1)]
    coef = [(-1) ** j * math.comb(m, j) for j in range(m + 1)]
    vals = [dzF(kappa + o * h, B) for o in offsets]
    return sum(c * v for c, v in zip(coef, vals)) / h ** m


def simple_root_floor(B, kappa: complex) -> float:
    """Threshold on |dzF| separating simple roots from near-multiples."""
    d2 = abs(dzF_higher(B, kappa, 2))
    return 1e-6 * max(1.0, d2)


def eigenvalue_gradient(B, kappa: complex, n_cells: int | None = None) -> GradientDensity:
    """Gradient density of a simple eigenvalue on a uniform cell grid.

    Raises NearMultiple when |dzF| sits under the simple-root floor, in which
    case the splitting machinery applies instead.
    """
    _require_root(B, kappa)
    dz = abs(dzF(kappa, B))
    if dz < simple_root_floor(B, kappa):
        raise NearMultiple(f"|dF/dz| = {dz:.3e} below the simple-root floor")
    if n_cells is None:
        if not isinstance(B, GridStructure):
            raise InputError("n_cells required for piecewise structures")
        n_cells = B.n_cells
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    bd, i_phi2b, _ = overlap_integrals(B, kappa)
    denom = 2.0 * kappa * i_phi2b - 1j * bd.phi1 ** 2
    cells = phi2_cell_integrals(B, kappa, edges)
    g = -kappa ** 2 * cells / denom * n_cells  # cell averages of the density
    return GradientDensity(kappa, tuple(complex(v) for v in g), abs(denom))


@dataclass(frozen=True)
class SplittingProbe:
    """Measured splitting of a multiple eigenvalue under B + zeta * d."""

    r: int
    zeta_values: tuple
    branch_points: tuple      # one tuple of r roots per zeta
    fitted_exponent: float
    c1_predicted: complex
    c1_fitted: complex

    def __post_init__(self):
        zs = np.asarray(self.zeta_values)
        if np.any(np.diff(zs) >= 0):
            raise InputError("zeta values must decrease toward 0")


def _perturbed(B: PiecewiseStructure, direction: GridStructure,
               zeta: float) -> PiecewiseStructure:
    """B + zeta * direction as a piecewise structure with loose bounds."""
    edges = np.union1d(direction.edges, B.breakpoints)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dvals = direction.as_array()
    vals = [B.value_at(x) + zeta * dvals[min(int(x * direction.n_cells),
                                             direction.n_cells - 1)]
            for x in mids]
    lo = min(0.0, min(vals))
    hi = max(1.0, max(vals))
    return PiecewiseStructure(tuple(edges), tuple(vals),
                              AdmissibleBounds(lo, hi + 1.0))


def splitting_probe(B, kappa0: complex, r: int, direction: GridStructure,
                    zetas) -> SplittingProbe:
    """Track the r Puiseux branches of an r-fold eigenvalue.

    For each zeta the r nearby roots of the perturbed structure are located
    by Newton from the predicted branch positions; the radii are regressed
    against zeta on log-log axes (slope ~ 1/r) and the fitted leading
    coefficient is compared with
    c1 = (-r! dBF(direction) / d^r F/dz^r)^(1/r).
    """
    zetas = tuple(sorted((float(z) for z in zetas), reverse=True))
    if r < 2:
        raise InputError("splitting requires multiplicity r >= 2")
    bd, _, _ = overlap_integrals(B, kappa0)
    cells = phi2_cell_integrals(B, kappa0, direction.edges)
    w = complex(np.dot(cells, direction.as_array()))
    if abs(w) < 1e-12 * max(1.0, float(np.max(np.abs(cells)))
                            * float(np.max(np.abs(direction.as_array())))):
        raise InputError("int phi^2 * direction vanishes; pick another direction")
    dbf = kappa0 * (-kappa0 * bd.psi1 + 1j * bd.dpsi1) * w
    drf = dzF_higher(B, kappa0, r)
    eta = -math.factorial(r) * dbf / drf
    c1_pred = eta ** (1.0 / r)

    branch_sets = []
    radii = []
    for zeta in zetas:
        Bz = _perturbed(B if isinstance(B, PiecewiseStructure) else B, direction, zeta)
        scale = abs(c1_pred) * zeta ** (1.0 / r)
        roots = []
        for k in range(r):
            seed = kappa0 + c1_pred * zeta ** (1.0 / r) * cmath.exp(2j * math.pi * k / r)
            res = newton_refine(Bz, seed, tol=1e-9, leash=6.0 * scale)
            if res is None:
                continue
            z = res[0]
            if all(abs(z - other) > 0.05 * scale for other in roots):
                roots.append(z)
        if len(roots) < r:
            raise BranchCountMismatch(
                f"found {len(roots)} of {r} branches at zeta = {zeta:.1e}")
        branch_sets.append(tuple(roots))
        radii.append(np.mean([abs(z - kappa0) for z in roots]))

    if len(zetas) >= 2:
        slope = np.polyfit(np.log(np.asarray(zetas)),
                           np.log(np.asarray(radii)), 1)[0]
    else:
        slope = math.nan  # one zeta verifies branches but cannot fit a slope
    # leading coefficient from the smallest zeta, phased against the branch
    # nearest the predicted direction
    z_small = zetas[-1]
    br = branch_sets[-1]
    mag = math.exp(float(np.mean([math.log(abs(z - kappa0)) for z in br]))) \
        / z_small ** (1.0 / r)
    best = min(br, key=lambda z: abs((z - kappa0) / z_small ** (1.0 / r) - c1_pred))
    c1_fit = mag * cmath.exp(1j * cmath.phase(best - kappa0))
    return SplittingProbe(r, zetas, tuple(branch_sets), float(slope),
                          c1_pred, c1_fit)


# -- double-eigenvalue fixture --------------------------------------------

def _two_layer(a: float, v1: float, v2: float) -> PiecewiseStructure:
    lo = min(0.0, v1, v2)
    hi = max(1.0, v1, v2)
    return PiecewiseStructure((0.0, a, 1.0), (v1, v2),
                              AdmissibleBounds(lo, hi + 1.0))


def find_double_eigenvalue(seed: tuple, kappa_seed: complex,
                           max_iters: int = 80):
    """Construct a two-layer structure with a genuine double eigenvalue.

    seed = (a, v1, v2): interface position and the two layer values; v1 stays
    fixed while (a, v2, Re kappa, Im kappa) solve F = dF/dz = 0 by damped
    Newton.  Bounds of the returned structure are relaxed around the layer
    values (diagnostic fixture only).

    A purely imaginary kappa_seed requests a double root on the axis: there
    both layer values stay fixed and (a, Im kappa) solve the two real
    equations F(i beta) = 0, Im dF/dz (i beta) = 0.
    """
    a, v1, v2 = (float(s) for s in seed)
    if kappa_seed.real == 0.0:
        return _find_axis_double(a, v1, v2, kappa_seed.imag, max_iters)
    p = np.array([a, v2, kappa_seed.real, kappa_seed.imag])

    def residual(q):
        aa, vv, re, im = q
        if not (0.01 < aa < 0.99) or vv <= 0 or im <= 0:
            return None
        B = _two_layer(aa, v1, vv)
        z = complex(re, im)
        f = charF(z, B)
        df = dzF(z, B)
        return np.array([f.real, f.imag, df.real, df.imag])

    r = residual(p)
    if r is None:
        raise InputError("seed outside the feasible region")
    for _ in range(max_iters):
        nrm = float(np.linalg.norm(r))
        if nrm < 1e-12:
            break
        # finite-difference Jacobian
        J = np.empty((4, 4))
        for j in range(4):
            h = 1e-7 * (1.0 + abs(p[j]))
            qp, qm = p.copy(), p.copy()
            qp[j] += h
            qm[j] -= h
            rp, rm = residual(qp), residual(qm)
            if rp is None or rm is None:
                raise NoConvergence("stepped outside the feasible region")
            J[:, j] = (rp - rm) / (2.0 * h)
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian: {exc}") from exc
        lam = 1.0
        for _ in range(30):
            rq = residual(p - lam * step)
            if rq is not None and float(np.linalg.norm(rq)) < nrm:
                p = p - lam * step
                r = rq
                break
            lam *= 0.5
        else:
            raise NoConvergence("damping failed to reduce the residual")
    else:
        raise NoConvergence(f"no double root after {max_iters} iterations")

    B = _two_layer(p[0], v1, p[1])
    kappa = complex(p[2], p[3])
    if abs(charF(kappa, B)) + abs(dzF(kappa, B)) >= 1e-10:
        raise NoConvergence("residual stalled above 1e-10")
    return B, kappa


def _find_axis_double(a: float, v1: float, v2: float, beta: float,
                      max_iters: int):
    from .field import axis_charF

    p = np.array([a, beta])

    def residual(q):
        aa, bb = q
        if not (0.01 < aa < 0.99) or bb <= 0:
            return None
        B = _two_layer(aa, v1, v2)
        return np.array([axis_charF(bb, B),
                         dzF(1j * bb, B).imag])

    r = residual(p)
    if r is None:
        raise InputError("axis seed outside the feasible region")
    for _ in range(max_iters):
        nrm = float(np.linalg.norm(r))
        if nrm < 1e-12:
            break
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * (1.0 + abs(p[j]))
            qp, qm = p.copy(), p.copy()
            qp[j] += h
            qm[j] -= h
            rp, rm = residual(qp), residual(qm)
            if rp is None or rm is None:
                raise NoConvergence("stepped outside the feasible region")
            J[:, j] = (rp - rm) / (2.0 * h)
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian: {exc}") from exc
        lam = 1.0
        for _ in range(30):
            rq = residual(p - lam * step)
            if rq is not None and float(np.linalg.norm(rq)) < nrm:
                p = p - lam * step
                r = rq
                break
            lam *= 0.5
        else:
            raise NoConvergence("damping failed to reduce the residual")
    else:
        raise NoConvergence(f"no axis double root after {max_iters} iterations")

    B = _two_layer(p[0], v1, v2)
    kappa = complex(0.0, p[1])
    if abs(charF(kappa, B)) + abs(dzF(kappa, B)) >= 1e-10:
        raise NoConvergence("axis residual stalled above 1e-10")
    return B, kappa
