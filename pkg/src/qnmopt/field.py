"""Fundamental solutions and the characteristic function of the cavity.

Everything is built on the Cauchy problem y'' = -z^2 B(x) y with the two
normalized solutions

    phi: phi(0) = 1, phi'(0) = 0        psi: psi(0) = 0, psi'(0) = 1.

For piecewise-constant B both propagate exactly through closed-form layer
matrices.  The characteristic function

    F(z; B) = phi(1, z) - i phi'(1, z) / z          (F(0) = 1)

is entire in z; its zeros in the upper half-plane are the quasi-normal
eigenvalues.  The module also provides the z-derivative of F by variation
of parameters (exact per layer, no quadrature error) and an independent
power-series evaluation of phi used as a cross-check oracle.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import TailNotConverged, ZeroFrequency
from .medium import GridStructure, PiecewiseStructure, to_piecewise

__all__ = [
    "BoundaryData", "CauchyState", "ModeTrace",
    "layer_matrix", "propagate", "charF", "charF_many", "dzF", "dzF_at_root",
    "phi_series", "SeriesResult", "overlap_integrals", "phi2_cell_integrals",
    "mode_values", "integral_residual", "axis_charF", "axis_dcharF",
]


@dataclass(frozen=True)
class CauchyState:
    """Solution pair (y, y') at a position x."""
    x: float
    y: complex
    dy: complex


@dataclass(frozen=True)
class ModeTrace:
    """Sampled solution along [0,1]; samples include every breakpoint of B."""
    samples: tuple

    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.samples])

    def ys(self) -> np.ndarray:
        return np.array([s.y for s in self.samples])


@dataclass(frozen=True)
class BoundaryData:
    """phi, phi', psi, psi' at x = 1 for a given (z, B)."""
    phi1: complex
    dphi1: complex
    psi1: complex
    dpsi1: complex

    def wronskian(self) -> complex:
        return self.phi1 * self.dpsi1 - self.dphi1 * self.psi1


def _segments(B) -> list:
    """(start, length, value) triples of a piecewise or grid structure."""
    if isinstance(B, GridStructure):
        B = to_piecewise(B)
    if not isinstance(B, PiecewiseStructure):
        raise TypeError(f"expected a structure, got {type(B)!r}")
    xs = B.breakpoints
    return [(xs[j], xs[j + 1] - xs[j], B.values[j]) for j in range(len(B.values))]


def layer_matrix(b: float, length: float, z: complex) -> np.ndarray:
    """Propagator of (y, y') across a constant layer.

    For w = z*sqrt(b) != 0 the matrix is [[cos wL, sin wL / w],
    [-w sin wL, cos wL]]; for b = 0 or z = 0 it degenerates to free
    propagation [[1, L], [0, 1]].  det = 1 always (Wronskian).
    """
    if length <= 0:
        raise ValueError("layer length must be positive")
    if b == 0.0 or z == 0:
        return np.array([[1.0, length], [0.0, 1.0]], dtype=complex)
    w = z * math.sqrt(b)
    wl = w * length
    c, s = cmath.cos(wl), cmath.sin(wl)
    return np.array([[c, s / w], [-w * s, c]], dtype=complex)


def propagate(B, z: complex, trace: bool = False):
    """phi and psi pushed from x=0 to x=1 through the layers of B.

    Returns BoundaryData, or (BoundaryData, (phi_trace, psi_trace)) when
    trace is set.  Exact up to rounding for piecewise-constant B.
    """
    p, dp = 1.0 + 0.0j, 0.0 + 0.0j
    q, dq = 0.0 + 0.0j, 1.0 + 0.0j
    phi_states = [CauchyState(0.0, p, dp)]
    psi_states = [CauchyState(0.0, q, dq)]
    for x0, length, b in _segments(B):
        if b == 0.0 or z == 0:
            p, dp = p + length * dp, dp
            q, dq = q + length * dq, dq
        else:
            w = z * math.sqrt(b)
            wl = w * length
            c, s = cmath.cos(wl), cmath.sin(wl)
            p, dp = c * p + (s / w) * dp, -w * s * p + c * dp
            q, dq = c * q + (s / w) * dq, -w * s * q + c * dq
        if trace:
            x1 = x0 + length
            phi_states.append(CauchyState(x1, p, dp))
            psi_states.append(CauchyState(x1, q, dq))
    bd = BoundaryData(p, dp, q, dq)
    if trace:
        return bd, (ModeTrace(tuple(phi_states)), ModeTrace(tuple(psi_states)))
    return bd


def charF(z: complex, B) -> complex:
    """Characteristic function F(z; B); F(0) = 1 (removable singularity)."""
    if z == 0:
        return 1.0 + 0.0j
    bd = propagate(B, z)
    return bd.phi1 - 1j * bd.dphi1 / z


def charF_many(zs, B) -> np.ndarray:
    """Vectorized F over an array of z (used by contour walks and scans)."""
    zs = np.asarray(zs, dtype=complex)
    flat = zs.ravel()
    p = np.ones_like(flat)
    dp = np.zeros_like(flat)
    for _, length, b in _segments(B):
        if b == 0.0:
            p = p + length * dp
            continue
        w = flat * math.sqrt(b)
        wl = w * length
        c, s = np.cos(wl), np.sin(wl)
        safe_w = np.where(w == 0, 1.0, w)
        sl = np.where(w == 0, length, s / safe_w)
        p, dp = c * p + sl * dp, -w * s * p + c * dp
    out = np.empty_like(flat)
    nz = flat != 0
    out[nz] = p[nz] - 1j * dp[nz] / flat[nz]
    out[~nz] = 1.0
    return out.reshape(zs.shape)


def mode_values(B, z: complex, xs) -> tuple:
    """(phi, phi') evaluated at sorted positions xs in [0, 1]."""
    xs = np.asarray(xs, dtype=float)
    if np.any(np.diff(xs) < 0) or xs.min() < -1e-15 or xs.max() > 1 + 1e-15:
        raise ValueError("positions must be sorted inside [0, 1]")
    phi = np.empty(len(xs), dtype=complex)
    dphi = np.empty(len(xs), dtype=complex)
    p, dp = 1.0 + 0.0j, 0.0 + 0.0j
    k = 0
    for x0, length, b in _segments(B):
        x1 = x0 + length
        in_seg = slice(k, int(np.searchsorted(xs, x1, side="left")))
        t = xs[in_seg] - x0
        if b == 0.0 or z == 0:
            phi[in_seg] = p + t * dp
            dphi[in_seg] = dp
            p, dp = p + length * dp, dp
        else:
            w = z * math.sqrt(b)
            c, s = np.cos(w * t), np.sin(w * t)
            phi[in_seg] = c * p + (s / w) * dp
            dphi[in_seg] = -w * s * p + c * dp
            cl, sl = cmath.cos(w * length), cmath.sin(w * length)
            p, dp = cl * p + (sl / w) * dp, -w * sl * p + cl * dp
        k = in_seg.stop
    # positions exactly at x = 1 (or within rounding of it)
    if k < len(xs):
        phi[k:] = p
        dphi[k:] = dp
    return phi, dphi


# -- per-layer product quadratures ----------------------------------------

def _trig_product_integrals(w: complex, length: float) -> tuple:
    """(Icc, Isc, Iss) = integrals of cos^2, sin*cos, sin^2 of w*t over [0, length]."""
    two_wl = 2.0 * w * length
    s2, c2 = cmath.sin(two_wl), cmath.cos(two_wl)
    icc = 0.5 * length + s2 / (4.0 * w)
    iss = 0.5 * length - s2 / (4.0 * w)
    isc = (1.0 - c2) / (4.0 * w)
    return icc, isc, iss


def _product_integral(w, length, a1, b1, a2, b2) -> complex:
    """Integral over the layer of (a1 cos + b1 sin)(a2 cos + b2 sin) of w*t."""
    icc, isc, iss = _trig_product_integrals(w, length)
    return a1 * a2 * icc + (a1 * b2 + b1 * a2) * isc + b1 * b2 * iss


def _linear_product_integral(length, p1, d1, p2, d2) -> complex:
    """Integral of (p1 + d1 t)(p2 + d2 t) over [0, length] (b = 0 layers)."""
    L = length
    return (p1 * p2 * L + 0.5 * (p1 * d2 + d1 * p2) * L ** 2
            + d1 * d2 * L ** 3 / 3.0)


def overlap_integrals(B, z: complex):
    """BoundaryData plus the B-weighted mode integrals.

    Returns (bd, int_0^1 phi^2 B ds, int_0^1 phi psi B ds), all computed
    with closed-form antiderivatives per layer.
    """
    p, dp = 1.0 + 0.0j, 0.0 + 0.0j
    q, dq = 0.0 + 0.0j, 1.0 + 0.0j
    i_phi2 = 0.0 + 0.0j
    i_phipsi = 0.0 + 0.0j
    for _, length, b in _segments(B):
        if b == 0.0 or z == 0:
            p, dp = p + length * dp, dp
            q, dq = q + length * dq, dq
            continue
        w = z * math.sqrt(b)
        ap, bp = p, dp / w
        aq, bq = q, dq / w
        i_phi2 += b * _product_integral(w, length, ap, bp, ap, bp)
        i_phipsi += b * _product_integral(w, length, ap, bp, aq, bq)
        wl = w * length
        c, s = cmath.cos(wl), cmath.sin(wl)
        p, dp = c * p + (s / w) * dp, -w * s * p + c * dp
        q, dq = c * q + (s / w) * dq, -w * s * q + c * dq
    return BoundaryData(p, dp, q, dq), i_phi2, i_phipsi


def phi2_cell_integrals(B, z: complex, edges) -> np.ndarray:
    """Unweighted integrals of phi^2 between consecutive edges.

    edges must be a sorted array starting at 0 and ending at 1; layer
    boundaries of B are merged in internally so each piece is resolved in
    closed form.
    """
    edges = np.asarray(edges, dtype=float)
    cuts = np.union1d(edges, [s[0] for s in _segments(B)] + [1.0])
    out = np.zeros(len(edges) - 1, dtype=complex)
    p, dp = 1.0 + 0.0j, 0.0 + 0.0j
    segs = _segments(B)
    si = 0
    for xa, xb in zip(cuts[:-1], cuts[1:]):
        while xa >= segs[si][0] + segs[si][1] - 1e-15 and si < len(segs) - 1:
            si += 1
        b = segs[si][2]
        length = xb - xa
        if length <= 0:
            continue
        if b == 0.0 or z == 0:
            val = _linear_product_integral(length, p, dp, p, dp)
            p, dp = p + length * dp, dp
        else:
            w = z * math.sqrt(b)
            val = _product_integral(w, length, p, dp / w, p, dp / w)
            wl = w * length
            c, s = cmath.cos(wl), cmath.sin(wl)
            p, dp = c * p + (s / w) * dp, -w * s * p + c * dp
        cell = int(np.searchsorted(edges, 0.5 * (xa + xb), side="right") - 1)
        cell = min(max(cell, 0), len(out) - 1)
        out[cell] += val
    return out


# -- derivative of F --------------------------------------------------------

def dzF(z: complex, B) -> complex:
    """dF/dz by variation of parameters (exact for piecewise-constant B).

    d_z phi solves the same equation with source -2 z B phi and zero initial
    data, so d_z phi(1) = psi(1) I1 - phi(1) I2 with I1 = -2z int phi^2 B and
    I2 = -2z int phi psi B; similarly for the x-derivative.
    """
    if z == 0:
        raise ZeroFrequency("dF/dz is not defined at z = 0")
    bd, i_phi2, i_phipsi = overlap_integrals(B, z)
    i1 = -2.0 * z * i_phi2
    i2 = -2.0 * z * i_phipsi
    dzphi1 = bd.psi1 * i1 - bd.phi1 * i2
    dzdxphi1 = bd.dpsi1 * i1 - bd.dphi1 * i2
    return dzphi1 - 1j * dzdxphi1 / z + 1j * bd.dphi1 / z ** 2


def dzF_at_root(kappa: complex, B) -> complex:
    """dF/dz at a zero of F via the root-specialized closed form.

    Independent of dzF's variational route; the two must agree at roots.
    """
    if kappa == 0:
        raise ZeroFrequency("dF/dz is not defined at z = 0")
    bd, i_phi2, _ = overlap_integrals(B, kappa)
    bracket = -kappa * bd.psi1 + 1j * bd.dpsi1
    return 2.0 * bracket * i_phi2 + bd.phi1 / kappa


# -- power-series oracle ------------------------------------------------------

class SeriesResult(NamedTuple):
    bd: BoundaryData
    n_terms: int
    tail_bound: float       # truncation bound on |phi(1)| terms left out
    roundoff_bound: float   # double-precision floor of the alternating sum


class _PiecewisePoly:
    """Polynomial coefficients per layer in the local variable t."""

    def __init__(self, coeffs: list):
        self.coeffs = coeffs  # list of 1-D arrays, one per layer

    def end_values(self, lengths) -> tuple:
        """(value, derivative) at the right end of the last layer."""
        c = self.coeffs[-1]
        L = lengths[-1]
        val = _polyval(c, L)
        dval = _polyval(np.arange(1, len(c)) * c[1:], L)
        return val, dval


def _polyval(c, t):
    out = 0.0
    for ck in c[::-1]:
        out = out * t + ck
    return out


def _double_integrate_sourced(source_coeffs, lengths, bvals):
    """Solve y'' = B * source, y(0) = y'(0) = 0, exactly per layer.

    source_coeffs holds the polynomial of the previous iterate per layer;
    returns the new per-layer polynomials.
    """
    entry, dentry = 0.0, 0.0
    out = []
    for c, L, b in zip(source_coeffs, lengths, bvals):
        m = np.arange(len(c))
        body = b * c / ((m + 1) * (m + 2))
        new = np.concatenate(([entry, dentry], body))
        out.append(new)
        entry = _polyval(new, L)
        dentry = _polyval(np.arange(1, len(new)) * new[1:], L)
    return out


def phi_series(B, z: complex, terms: int = 200, tol: float = 1e-16) -> SeriesResult:
    """phi and psi at x = 1 from the Maclaurin series in z^2.

    The iterates solve y_j'' = B y_{j-1} with zero initial data and are
    nonnegative piecewise polynomials, integrated exactly per layer, so each
    coefficient carries full double precision.  Summation stops once the
    a-priori term bound (sup B |z|^2)^j / (2j)! drops below tol; the result
    reports that tail bound and a roundoff majorant eps * sum |term| for the
    alternating sum itself.
    """
    segs = _segments(B)
    lengths = [s[1] for s in segs]
    bvals = [s[2] for s in segs]
    starts = [s[0] for s in segs]
    sup_b = max(bvals) if bvals else 0.0
    az2 = (abs(z) ** 2) * sup_b

    # j = 0 iterates: phi_0 = 1, psi_0 = x (local form x0 + t per layer)
    phi_c = [np.array([1.0]) for _ in segs]
    psi_c = [np.array([x0, 1.0]) for x0 in starts]

    z2 = z * z
    zpow = 1.0 + 0.0j
    phi1 = complex(_polyval(phi_c[-1], lengths[-1]))
    dphi1 = 0.0 + 0.0j
    psi1, dpsi1 = (complex(v) for v in
                   _PiecewisePoly(psi_c).end_values(lengths))
    abs_sum = abs(phi1)

    n = 0
    bound = 1.0
    fact_arg = 0
    while True:
        n += 1
        if n > terms:
            raise TailNotConverged(
                f"term bound {bound:.3e} still above {tol:.1e} after {terms} terms")
        phi_c = _double_integrate_sourced(phi_c, lengths, bvals)
        psi_c = _double_integrate_sourced(psi_c, lengths, bvals)
        zpow *= -z2
        pv, pd = _PiecewisePoly(phi_c).end_values(lengths)
        qv, qd = _PiecewisePoly(psi_c).end_values(lengths)
        phi1 += zpow * pv
        dphi1 += zpow * pd
        psi1 += zpow * qv
        dpsi1 += zpow * qd
        abs_sum += abs(zpow) * abs(pv)
        # a-priori bound (sup B |z|^2)^n / (2n)!
        fact_arg += 2
        bound *= az2 / (fact_arg * (fact_arg - 1))
        if bound < tol and n >= 2:
            break

    tail = bound / max(1e-300, 1.0 - az2 / ((fact_arg + 1) * (fact_arg + 2))) \
        if az2 < (fact_arg + 1) * (fact_arg + 2) else math.inf
    roundoff = 8.0 * np.finfo(float).eps * abs_sum
    return SeriesResult(BoundaryData(phi1, dphi1, psi1, dpsi1),
                        n, float(tail), float(roundoff))


# -- integral-form residuals ---------------------------------------------------

def _layer_first_moments(w, length, p, dp):
    """(int phi dt, int t phi dt) over a layer from its entry state."""
    a, b = p, dp / w
    wl = w * length
    c, s = cmath.cos(wl), cmath.sin(wl)
    i0 = a * s / w + b * (1.0 - c) / w
    i_t = a * (c + wl * s - 1.0) / w ** 2 + b * (s - wl * c) / w ** 2
    return i0, i_t


def integral_residual(B, kappa: complex, points_per_layer: int = 8) -> tuple:
    """Residuals of the integral form of the eigenvalue problem.

    r1 is the sup-norm defect of y(x) = 1 - kappa^2 int_0^x (x-s) B y ds with
    y = phi (an identity, so r1 is a pure consistency number), and r2 is
    |y(1) + i kappa int_0^1 B y ds|, which vanishes exactly on the spectrum.
    """
    if kappa == 0:
        raise ZeroFrequency("integral form requires kappa != 0")
    segs = _segments(B)
    r1 = 0.0
    c1 = 0.0 + 0.0j  # int_0^x B phi
    c2 = 0.0 + 0.0j  # int_0^x s B phi
    p, dp = 1.0 + 0.0j, 0.0 + 0.0j
    for x0, length, b in segs:
        ts = np.linspace(0.0, length, points_per_layer + 1)[1:]
        if b == 0.0:
            for t in ts:
                x = x0 + t
                y = p + t * dp
                r1 = max(r1, abs(y - 1.0 + kappa ** 2 * (x * c1 - c2)))
            p, dp = p + length * dp, dp
            continue
        w = kappa * math.sqrt(b)
        for t in ts:
            x = x0 + t
            i0, i_t = _layer_first_moments(w, t, p, dp)
            part1 = c1 + b * i0
            part2 = c2 + b * (x0 * i0 + i_t)
            y = cmath.cos(w * t) * p + cmath.sin(w * t) / w * dp
            r1 = max(r1, abs(y - 1.0 + kappa ** 2 * (x * part1 - part2)))
        i0, i_t = _layer_first_moments(w, length, p, dp)
        c1 += b * i0
        c2 += b * (x0 * i0 + i_t)
        wl = w * length
        c, s = cmath.cos(wl), cmath.sin(wl)
        p, dp = c * p + (s / w) * dp, -w * s * p + c * dp
    r2 = abs(p + 1j * kappa * c1)
    return float(r1), float(r2)


# -- imaginary-axis specialization ---------------------------------------------

def axis_charF(beta: float, B) -> float:
    """F(i beta; B) computed in real arithmetic (it is real for real B).

    On the axis the layer propagators are hyperbolic: cosh/sinh of
    beta * sqrt(b) * length.
    """
    if beta <= 0:
        raise ZeroFrequency("axis evaluation needs beta > 0")
    p, dp = 1.0, 0.0
    for _, length, b in _segments(B):
        if b == 0.0:
            p, dp = p + length * dp, dp
        else:
            w = beta * math.sqrt(b)
            wl = w * length
            c, s = math.cosh(wl), math.sinh(wl)
            p, dp = c * p + (s / w) * dp, w * s * p + c * dp
    return p - dp / beta


def axis_dcharF(beta: float, B) -> float:
    """d/d beta of F(i beta; B), real-valued."""
    return (1j * dzF(1j * beta, B)).real
