"""Minimizing the decay rate Im kappa at a prescribed frequency.

Projected gradient flow on a uniform-cell medium: the step direction is the
clipped anti-gradient of Im kappa made first-order neutral for Re kappa (a
one-parameter family resolved by a scalar root solve), with Armijo
backtracking on the tracked eigenvalue, a frequency re-pinning correction,
and a finalization pass that rounds to a two-valued structure and then
polishes the switch positions continuously.  Multiple-eigenvalue collisions
are detected through |dF/dz| and handled by a Puiseux escape direction whose
downward branch is chosen explicitly.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (CollisionDetected, InfeasibleError, InputError,
                     LostEigenvalue, NearMultiple, NoFeasibleDirection,
                     NumericalError, QnmOptError, StalledDirection)
from .field import (axis_charF, axis_dcharF, charF, dzF, mode_values,
                    overlap_integrals, phi2_cell_integrals)
from .medium import (AdmissibleBounds, GridStructure, PiecewiseStructure,
                     constant, extremality_measure, project_to_box,
                     round_to_extreme, switch_points, to_grid, to_piecewise)
from .sensitivity import (GradientDensity, dzF_higher, eigenvalue_gradient,
                          splitting_probe)
from .spectrum import SpectralWindow, axis_offset, locate, newton_refine

__all__ = [
    "OptimizeConfig", "IterationRecord", "OptimizeResult", "step_direction",
    "minimize_im_at_frequency", "multiple_eigenvalue_escape", "sweep_I",
    "constant_upper_bound", "best_constant_seed",
]


@dataclass(frozen=True)
class OptimizeConfig:
    """Knobs of one optimization run at a fixed target frequency alpha."""

    alpha: float
    bounds: AdmissibleBounds
    n_cells: int = 256
    step0: float = 0.2
    step_grow: float = 1.5
    step_shrink: float = 0.5
    max_iters: int = 400
    tol_freq: float = 1e-8
    tol_grad: float = 1e-10
    seed_structure: GridStructure | None = None
    seed_kappa: complex | None = None
    round_threshold: float = 0.25

    def __post_init__(self):
        if self.n_cells < 16:
            raise InputError("need at least 16 grid cells")
        if self.step0 <= 0 or self.tol_freq <= 0:
            raise InputError("step0 and tol_freq must be positive")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    kappa: complex
    objective: float      # Im kappa
    drift: float          # |Re kappa - alpha|
    extremality: float
    step: float


@dataclass(frozen=True)
class OptimizeResult:
    B: GridStructure
    kappa: complex
    trajectory: tuple
    status: str
    rounded: PiecewiseStructure | None = None
    rounded_kappa: complex | None = None
    polished: PiecewiseStructure | None = None
    polished_kappa: complex | None = None


# -- seeding -------------------------------------------------------------------

def _constant_candidates(alpha: float, bounds: AdmissibleBounds) -> list:
    """Constant media with an eigenvalue exactly at Re kappa = alpha.

    From the closed form Re = pi (n + shift) / sqrt(b), each integer n yields
    b = (pi (n + shift) / alpha)^2; keep those inside the box (b = 1 has no
    spectrum).
    """
    if alpha == 0.0:
        bs = [bounds.b2] if bounds.b2 > 1.0 else []
        return [(b, complex(0.0, axis_offset(b))) for b in bs]
    out = []
    a = abs(alpha)
    for shift in (0.0, 0.5):
        n = 1 if shift == 0.0 else 0
        while True:
            b = (math.pi * (n + shift) / a) ** 2
            n += 1
            if b > bounds.b2 + 1e-12:
                break
            if b < bounds.b1 - 1e-12 or abs(b - 1.0) < 1e-9:
                continue
            # the n-offset family lives above 1, the half-shift family below
            if (shift == 0.0) != (b > 1.0):
                continue
            b = min(max(b, bounds.b1), bounds.b2)
            out.append((b, complex(alpha, axis_offset(b))))
    return out


def constant_upper_bound(alpha: float, bounds: AdmissibleBounds) -> float:
    """min Im over constant media having an eigenvalue at frequency alpha."""
    cands = _constant_candidates(alpha, bounds)
    if not cands:
        return math.inf
    return min(k.imag for _, k in cands)


def best_constant_seed(alpha: float, bounds: AdmissibleBounds):
    """(GridStructure factory value b, kappa) of the best constant preset."""
    cands = _constant_candidates(alpha, bounds)
    if not cands:
        raise InfeasibleError(
            f"no constant structure in [{bounds.b1}, {bounds.b2}] resonates "
            f"at frequency {alpha}")
    return min(cands, key=lambda t: t[1].imag)


# -- step direction --------------------------------------------------------------

def _clipped_direction(raw: np.ndarray, vals: np.ndarray,
                       bounds: AdmissibleBounds, act_tol: float) -> np.ndarray:
    d = np.clip(raw, -1.0, 1.0)
    d = np.where(vals <= bounds.b1 + act_tol, np.maximum(d, 0.0), d)
    d = np.where(vals >= bounds.b2 - act_tol, np.minimum(d, 0.0), d)
    return d


def step_direction(g: GradientDensity, B: GridStructure,
                   bounds: AdmissibleBounds, tol_grad: float = 1e-10,
                   act_tol: float = 1e-12) -> GridStructure:
    """Feasible direction of steepest Im-descent that is Re-neutral.

    delta B = clip(-Im g + lambda Re g) with the multiplier fixed by
    int Re(g) delta B = 0 under the active-set clipping; the map
    lambda -> int Re(g) delta B is monotone piecewise linear, so a scalar
    bracketing solve suffices.  StalledDirection signals first-order
    optimality (or an incompatible constraint).
    """
    ga = g.as_array()
    re, im = ga.real, ga.imag
    vals = B.as_array()
    n = len(vals)

    def h(lam: float) -> float:
        d = _clipped_direction(-im + lam * re, vals, bounds, act_tol)
        return float(np.dot(re, d)) / n

    if np.max(np.abs(re)) < 1e-300:
        lam = 0.0
    else:
        lo, hi = -1.0, 1.0
        scale = (np.max(np.abs(im)) + 1.0) / max(np.max(np.abs(re)), 1e-300)
        bracketed = False
        for _ in range(80):
            if h(lo) <= 0.0 <= h(hi):
                bracketed = True
                break
            lo *= 2.0
            hi *= 2.0
            if hi > 1e9 * scale:
                break
        if not bracketed:
            raise StalledDirection("cannot make the step frequency-neutral")
        lam = brentq(h, lo, hi, xtol=1e-15 * max(1.0, abs(lo), abs(hi)))

    d = _clipped_direction(-im + lam * re, vals, bounds, act_tol)
    slope = float(np.dot(im, d)) / n
    if slope >= -tol_grad:
        # clipping can collapse the whole lambda family to d = 0 at a railed
        # structure; the saturated LP direction resolves that degeneracy
        d = _lp_direction(-im, re, vals, bounds, act_tol)
        slope = float(np.dot(im, d)) / n
        if slope >= -tol_grad:
            raise StalledDirection(
                f"predicted Im decrease {slope:.3e} above -{tol_grad:.0e}")
    return B.with_values(d)


# -- eigenvalue tracking ----------------------------------------------------------

def _trust_radius(B: GridStructure) -> float:
    mean_b = float(np.mean(B.as_array()))
    return 0.35 * math.pi / math.sqrt(max(mean_b, 1e-6))


def _track(B, kappa_prev: complex, trust: float) -> complex:
    res = newton_refine(B, kappa_prev, tol=1e-10, leash=trust)
    if res is not None:
        return res[0]
    pad = 2.0 * trust
    w = SpectralWindow(kappa_prev.real - pad, kappa_prev.real + pad,
                       max(kappa_prev.imag - pad, 1e-4),
                       kappa_prev.imag + pad)
    try:
        roots = locate(B, w, tol=1e-10)
    except NumericalError as exc:
        raise LostEigenvalue(f"re-location failed: {exc}") from exc
    if not roots:
        raise LostEigenvalue(f"no eigenvalue near {kappa_prev}")
    return min((r.kappa for r in roots), key=lambda z: abs(z - kappa_prev))


def _lp_direction(obj: np.ndarray, con: np.ndarray, vals: np.ndarray,
                  bounds: AdmissibleBounds, act_tol: float = 1e-12) -> np.ndarray:
    """Feasible direction maximizing sum(obj * d) subject to sum(con * d) = 0.

    One-constraint box LP (fractional knapsack): cells sit at their feasible
    extreme by the sign of obj - nu * con, with nu bisected until the
    constraint response crosses zero, and one marginal cell made fractional
    to land on it exactly.
    """
    u = np.where(vals >= bounds.b2 - act_tol, 0.0, 1.0)
    l = np.where(vals <= bounds.b1 + act_tol, 0.0, -1.0)

    def d_of(nu: float) -> np.ndarray:
        return np.where(obj - nu * con > 0.0, u, l)

    def h(nu: float) -> float:
        return float(np.dot(con, d_of(nu)))

    lo, hi = -1e12, 1e12
    if h(lo) < 0.0 or h(hi) > 0.0:
        return d_of(0.0)  # constraint response ~ 0 for every sign pattern
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    d = d_of(hi)
    resid = float(np.dot(con, d))
    if resid != 0.0:
        # make the marginal cell fractional to cancel the constraint response
        score = np.abs(obj - hi * con)
        for m in np.argsort(score)[:8]:
            if con[m] == 0.0 or u[m] <= l[m]:
                continue
            dm = d[m] - resid / con[m]
            if l[m] - 1e-12 <= dm <= u[m] + 1e-12:
                d[m] = min(max(dm, l[m]), u[m])
                break
    return d


def _pin_frequency(B: GridStructure, kappa: complex, cfg: OptimizeConfig,
                   max_rounds: int = 12):
    """Pull Re kappa back to alpha along an Im-neutral feasible direction.

    Returns (B, kappa, ok); ok=False means the feasible cone cannot reach
    the target frequency from here (caller should reject the step).
    """
    bounds = cfg.bounds
    n = B.n_cells
    for _ in range(max_rounds):
        drift = kappa.real - cfg.alpha
        if abs(drift) <= 0.5 * cfg.tol_freq:
            return B, kappa, True
        g = eigenvalue_gradient(B, kappa)
        ga = g.as_array()
        vals = B.as_array()
        want = -drift  # desired Re move
        sgn = 1.0 if want >= 0 else -1.0
        d = _lp_direction(sgn * ga.real, ga.imag, vals, bounds)
        dre = float(np.dot(ga.real, d)) / n
        if abs(dre) < 1e-14:
            return B, kappa, False
        s = want / dre
        s = max(min(s, 0.1 * bounds.width), -0.1 * bounds.width)
        B = project_to_box(B.with_values(vals + s * d), bounds)
        kappa = _track(B, kappa, _trust_radius(B))
    return B, kappa, abs(kappa.real - cfg.alpha) <= 0.5 * cfg.tol_freq


# -- main loop ---------------------------------------------------------------------

def minimize_im_at_frequency(config: OptimizeConfig,
                             B0: GridStructure | None = None) -> OptimizeResult:
    """Projected gradient minimization of Im kappa with Re kappa = alpha.

    Returns the final grid structure, tracked eigenvalue, per-iteration
    trajectory, and the rounded + switch-polished bang-bang finalization.
    Raises LostEigenvalue / CollisionDetected with a .partial attribute
    carrying the trajectory so far.
    """
    cfg = config
    if cfg.alpha == 0.0:
        return _minimize_axis(cfg, B0)

    bounds = cfg.bounds
    if B0 is None:
        B0 = cfg.seed_structure
    if B0 is None:
        b, k0 = best_constant_seed(cfg.alpha, bounds)
        B0 = to_grid(constant(b, bounds), cfg.n_cells)
        kappa = k0
    else:
        B0 = project_to_box(B0, bounds)
        kappa = cfg.seed_kappa
        if kappa is None:
            _, k0 = best_constant_seed(cfg.alpha, bounds)
            kappa = k0
    res = newton_refine(B0, kappa, tol=1e-9, leash=1.0)
    if res is None:
        raise InfeasibleError(f"seed eigenvalue near {kappa} did not converge")
    kappa = res[0]

    B = B0
    try:
        B, kappa, pinned = _pin_frequency(B, kappa, cfg)
    except NearMultiple as exc:
        err = CollisionDetected(str(exc))
        err.partial = OptimizeResult(B, kappa, (), "collision")
        raise err from exc
    if not pinned:
        raise InfeasibleError(
            f"seed cannot be pinned to frequency {cfg.alpha}")
    eps_ext = 0.05 * bounds.width
    step = cfg.step0
    trajectory = [IterationRecord(0, kappa, kappa.imag,
                                  abs(kappa.real - cfg.alpha),
                                  extremality_measure(B, bounds, eps_ext), 0.0)]
    status = "max_iters"
    step_min = 1e-7 * bounds.width

    for it in range(1, cfg.max_iters + 1):
        if kappa.imag <= 0:
            raise NumericalError("tracked eigenvalue left the upper half-plane")
        try:
            g = eigenvalue_gradient(B, kappa)
        except NearMultiple as exc:
            err = CollisionDetected(str(exc))
            err.partial = _finalize(B, kappa, cfg, trajectory, "collision")
            raise err from exc
        try:
            direction = step_direction(g, B, bounds, cfg.tol_grad)
        except StalledDirection:
            status = "stalled"
            break
        d = direction.as_array()
        slope = float(np.dot(g.as_array().imag, d)) / B.n_cells

        accepted = False
        while step >= step_min:
            try:
                Bt = project_to_box(B.with_values(B.as_array() + step * d), bounds)
                kt = _track(Bt, kappa, _trust_radius(B))
                Bt, kt, pinned = _pin_frequency(Bt, kt, cfg)
            except (LostEigenvalue, NearMultiple):
                step *= cfg.step_shrink
                continue
            if pinned and kt.imag <= kappa.imag + 1e-4 * step * slope:
                B, kappa = Bt, kt
                accepted = True
                step = min(step * cfg.step_grow, 2.0 * bounds.width)
                break
            step *= cfg.step_shrink
        if not accepted:
            status = "stalled"
            break
        trajectory.append(IterationRecord(
            it, kappa, kappa.imag, abs(kappa.real - cfg.alpha),
            extremality_measure(B, bounds, eps_ext), step))

    return _finalize(B, kappa, cfg, trajectory, status)


def _minimize_axis(cfg: OptimizeConfig, B0: GridStructure | None) -> OptimizeResult:
    """alpha = 0: the tracked root lives on the imaginary axis and the
    whole iteration runs in real arithmetic."""
    bounds = cfg.bounds
    if B0 is None:
        B0 = cfg.seed_structure
    if B0 is None:
        if bounds.b2 <= 1.0:
            raise InfeasibleError("no axis eigenvalues when b2 <= 1")
        B0 = to_grid(constant(bounds.b2, bounds), cfg.n_cells)
    B = project_to_box(B0, bounds)
    beta = _axis_root(
        B, seed=cfg.seed_kappa.imag if cfg.seed_kappa is not None else None)
    eps_ext = 0.05 * bounds.width
    step = cfg.step0
    trajectory = [IterationRecord(0, complex(0.0, beta), beta, 0.0,
                                  extremality_measure(B, bounds, eps_ext), 0.0)]
    status = "max_iters"
    step_min = 1e-9 * bounds.width
    for it in range(1, cfg.max_iters + 1):
        grad = _axis_gradient(B, beta)  # d beta / d B_i (cell averages)
        d = _clipped_direction(-grad / max(np.max(np.abs(grad)), 1e-300),
                               B.as_array(), bounds, 1e-12)
        slope = float(np.dot(grad, d)) / B.n_cells
        if slope >= -cfg.tol_grad:
            status = "stalled"
            break
        accepted = False
        while step >= step_min:
            Bt = project_to_box(B.with_values(B.as_array() + step * d), bounds)
            bt = _axis_newton(Bt, beta)
            if bt is not None and bt <= beta + 1e-4 * step * slope:
                B, beta = Bt, bt
                step = min(step * cfg.step_grow, 2.0 * bounds.width)
                accepted = True
                break
            step *= cfg.step_shrink
        if not accepted:
            status = "stalled"
            break
        trajectory.append(IterationRecord(
            it, complex(0.0, beta), beta, 0.0,
            extremality_measure(B, bounds, eps_ext), step))
    return _finalize(B, complex(0.0, beta), cfg, trajectory, status)


def _axis_root(B, seed: float | None = None) -> float:
    """Smallest axis root of the real characteristic function."""
    if seed is not None:
        out = _axis_newton(B, seed)
        if out is not None:
            return out
    bs = np.geomspace(1e-3, 50.0, 400)
    gs = np.array([axis_charF(b, B) for b in bs])
    for i in range(len(bs) - 1):
        if gs[i] * gs[i + 1] < 0:
            return brentq(lambda b: axis_charF(b, B), bs[i], bs[i + 1],
                          xtol=1e-14)
    raise InfeasibleError("structure has no eigenvalue on the imaginary axis")


def _axis_newton(B, beta0: float, max_iter: int = 60) -> float | None:
    b = beta0
    for _ in range(max_iter):
        g = axis_charF(b, B)
        dg = axis_dcharF(b, B)
        if dg == 0.0:
            return None
        step = g / dg
        b -= step
        if b <= 0 or abs(b - beta0) > 5.0 * (1.0 + beta0):
            return None
        if abs(step) < 1e-14 * (1.0 + abs(b)):
            return b
    return None


def _axis_gradient(B: GridStructure, beta: float) -> np.ndarray:
    """d beta / d B as real cell averages: -beta^2 int_cell phi^2 / R."""
    kappa = 1j * beta
    bd, i_phi2b, _ = overlap_integrals(B, kappa)
    R = (2.0 * kappa * i_phi2b - 1j * bd.phi1 ** 2).imag  # D = i R
    cells = phi2_cell_integrals(B, kappa, B.edges).real
    return -beta ** 2 * cells / R * B.n_cells


# -- finalization -----------------------------------------------------------------

def _finalize(B: GridStructure, kappa: complex, cfg: OptimizeConfig,
              trajectory: list, status: str) -> OptimizeResult:
    rounded, _ = round_to_extreme(B, cfg.bounds, cfg.round_threshold)
    out = OptimizeResult(B, kappa, tuple(trajectory), status)
    try:
        if cfg.alpha == 0.0:
            b_r = _axis_root(rounded, seed=kappa.imag)
            k_r = complex(0.0, b_r)
            return OptimizeResult(B, kappa, tuple(trajectory), status,
                                  rounded, k_r, rounded, k_r)
        k_r = _track(rounded, kappa, _trust_radius(B))
        polished, k_p = _polish_switches(rounded, k_r, cfg)
        return OptimizeResult(B, kappa, tuple(trajectory), status,
                              rounded, k_r, polished, k_p)
    except (LostEigenvalue, NumericalError, InfeasibleError):
        return out


def _switch_sensitivities(B: PiecewiseStructure, kappa: complex) -> np.ndarray:
    """d kappa / d x_j for each interior breakpoint (value jump * density)."""
    xs = np.asarray(B.breakpoints[1:-1])
    vals = np.asarray(B.values)
    bd, i_phi2b, _ = overlap_integrals(B, kappa)
    denom = 2.0 * kappa * i_phi2b - 1j * bd.phi1 ** 2
    phi, _ = mode_values(B, kappa, xs)
    dens = -kappa ** 2 * phi ** 2 / denom
    return (vals[:-1] - vals[1:]) * dens


def _drop_thin_layers(B: PiecewiseStructure, min_width: float = 1e-4):
    """Remove layers narrower than min_width (collapsed switch pairs the
    continuum optimum wants gone); equal-valued neighbours re-merge."""
    while len(B.values) > 1:
        pts = list(B.breakpoints)
        vals = list(B.values)
        widths = [b - a for a, b in zip(pts[:-1], pts[1:])]
        thin = [j for j, w in enumerate(widths) if w < min_width]
        if not thin:
            return B
        j = thin[0]
        del vals[j]
        del pts[j if j > 0 else 1]  # the sliver merges into a neighbour
        B = PiecewiseStructure(tuple(pts), tuple(vals), B.bounds)
    return B


def _polish_switches(B: PiecewiseStructure, kappa: complex,
                     cfg: OptimizeConfig, max_iters: int = 60):
    """Continuum refinement of switch positions at fixed values.

    Runs the stationarity Newton solve, and whenever it drives a pair of
    switches together (a sliver layer the optimum does not want), removes
    the collapsed layer and re-solves with the reduced switch count.
    """
    for _ in range(4):
        B2, k2 = _polish_newton(B, kappa, cfg, max_iters)
        cleaned = _drop_thin_layers(B2)
        if cleaned == B2:
            return B2, k2
        res = newton_refine(cleaned, k2, tol=1e-9, leash=0.3)
        if res is None:
            return B2, k2
        B, kappa = cleaned, res[0]
    return B, kappa


def _polish_newton(B: PiecewiseStructure, kappa: complex,
                   cfg: OptimizeConfig, max_iters: int = 60):
    """One damped-Newton pass on Im(dk/dx_j) = lam Re(dk/dx_j), Re k = alpha."""
    n = len(B.breakpoints) - 2
    if n == 0:
        return B, kappa
    vals = B.values
    bounds = B.bounds

    def build(xs):
        pts = (0.0, *sorted(float(x) for x in xs), 1.0)
        if any(b - a < 1e-9 for a, b in zip(pts[:-1], pts[1:])):
            return None
        return PiecewiseStructure(pts, vals, bounds)

    def residual(q, kappa_near):
        xs, lam = q[:-1], q[-1]
        Bq = build(xs)
        if Bq is None:
            return None, None
        res = newton_refine(Bq, kappa_near, tol=1e-9, leash=0.5)
        if res is None:
            return None, None
        kq = res[0]
        sens = _switch_sensitivities(Bq, kq)
        out = np.empty(n + 1)
        out[:n] = sens.imag - lam * sens.real
        out[n] = kq.real - cfg.alpha
        return out, kq

    q = np.array([*B.breakpoints[1:-1], 0.0])
    r, kq = residual(q, kappa)
    if r is None:
        return B, kappa
    kappa_cur = kq
    for _ in range(max_iters):
        nrm = float(np.linalg.norm(r))
        if nrm < 1e-12:
            break
        J = np.empty((n + 1, n + 1))
        ok = True
        for j in range(n + 1):
            h = 1e-7 * (1.0 + abs(q[j]))
            qp, qm = q.copy(), q.copy()
            qp[j] += h
            qm[j] -= h
            rp, _ = residual(qp, kappa_cur)
            rm, _ = residual(qm, kappa_cur)
            if rp is None or rm is None:
                ok = False
                break
            J[:, j] = (rp - rm) / (2.0 * h)
        if not ok:
            break
        try:
            stepv = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        lam_damp = 1.0
        improved = False
        for _ in range(25):
            rq, kq = residual(q - lam_damp * stepv, kappa_cur)
            if rq is not None and float(np.linalg.norm(rq)) < nrm:
                q = q - lam_damp * stepv
                r, kappa_cur = rq, kq
                improved = True
                break
            lam_damp *= 0.5
        if not improved:
            break
    Bq = build(q[:-1])
    if Bq is None:
        return B, kappa
    res = newton_refine(Bq, kappa_cur, tol=1e-11, leash=0.5)
    if res is None:
        return B, kappa
    kp = res[0]
    # pinning Re exactly to alpha may cost a little Im; only reject clearly
    # non-local outcomes
    if kp.imag <= 0 or kp.imag > kappa.imag + 0.02 or abs(kp - kappa) > 0.3:
        return B, kappa
    return Bq, kp


# -- multiple-eigenvalue escape ----------------------------------------------------

def multiple_eigenvalue_escape(B, kappa: complex, r: int,
                               bounds: AdmissibleBounds,
                               n_cells: int = 64):
    """Feasible direction whose Puiseux branch points straight down.

    Steers W = int phi^2 d so that the r-th root of
    -r! dBF(d)/d^r F has argument -pi/2; returns (direction, zeta, branches)
    with the located branches at the recommended zeta as verification.
    """
    if r < 2:
        raise InputError("escape applies to multiplicities r >= 2")
    bd, _, _ = overlap_integrals(B, kappa)
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    cells = phi2_cell_integrals(B, kappa, edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    if isinstance(B, GridStructure):
        bvals = np.asarray(B.values)
    else:
        bvals = np.array([B.value_at(x) for x in mids])
    kM = kappa * (-kappa * bd.psi1 + 1j * bd.dpsi1)
    drf = dzF_higher(B, kappa, r)
    pref = -math.factorial(r) * kM / drf
    # need arg(pref * W) = -r pi/2 (mod 2 pi)
    t_star = (-r * math.pi / 2.0 - cmath.phase(pref)) % (2.0 * math.pi)

    gens = []  # (complex generator, cell index, sign)
    up_room = bvals < bounds.b2 - 1e-9
    dn_room = bvals > bounds.b1 + 1e-9
    scale = float(np.max(np.abs(cells)))
    if scale < 1e-14:
        raise NoFeasibleDirection("phi^2 cell integrals all vanish")
    for i in range(n_cells):
        if abs(cells[i]) < 1e-12 * scale:
            continue
        if up_room[i]:
            gens.append((cells[i], i, +1.0))
        if dn_room[i]:
            gens.append((-cells[i], i, -1.0))
    if not gens:
        raise NoFeasibleDirection("box active everywhere")

    def angdist(a, b):
        return abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)

    target = cmath.exp(1j * t_star)
    gens.sort(key=lambda t: angdist(cmath.phase(t[0]), t_star))
    g0 = gens[0]
    dvals = np.zeros(n_cells)
    if angdist(cmath.phase(g0[0]), t_star) < 1e-9:
        dvals[g0[1]] = g0[2]
        W = g0[0]
    else:
        # bracket the target ray with two generators and mix them
        lefts = [g for g in gens
                 if 0 < (t_star - cmath.phase(g[0])) % (2 * math.pi) < math.pi]
        rights = [g for g in gens
                  if 0 < (cmath.phase(g[0]) - t_star) % (2 * math.pi) < math.pi]
        if not lefts or not rights:
            raise NoFeasibleDirection("target ray not in the feasible cone")
        ga = min(lefts, key=lambda g: angdist(cmath.phase(g[0]), t_star))
        gb = min(rights, key=lambda g: angdist(cmath.phase(g[0]), t_star))
        M = np.array([[ga[0].real, gb[0].real], [ga[0].imag, gb[0].imag]])
        try:
            c = np.linalg.solve(M, np.array([target.real, target.imag]))
        except np.linalg.LinAlgError as exc:
            raise NoFeasibleDirection("degenerate generator pair") from exc
        if c[0] < 0 or c[1] < 0:
            raise NoFeasibleDirection("target ray not in the feasible cone")
        dvals[ga[1]] += c[0] * ga[2]
        dvals[gb[1]] += c[1] * gb[2]
        W = c[0] * ga[0] + c[1] * gb[0]
    nrm = float(np.max(np.abs(dvals)))
    dvals /= nrm
    W /= nrm

    direction = GridStructure(tuple(dvals), bounds)
    c1 = (pref * W) ** (1.0 / r)
    # zeta: branch displacement ~ 1e-3, limited by box feasibility
    zeta = (1e-3 / abs(c1)) ** r
    room = math.inf
    for i in range(n_cells):
        if dvals[i] > 0:
            room = min(room, (bounds.b2 - bvals[i]) / dvals[i])
        elif dvals[i] < 0:
            room = min(room, (bvals[i] - bounds.b1) / (-dvals[i]))
    zeta = min(zeta, 0.9 * room)

    probe = splitting_probe(B, kappa, r, direction, [zeta])
    branches = probe.branch_points[0]
    best = min(branches, key=lambda z: angdist(cmath.phase(z - kappa),
                                               -math.pi / 2.0))
    if angdist(cmath.phase(best - kappa), -math.pi / 2.0) > math.pi / (2.0 * r):
        raise NoFeasibleDirection("no branch points downward at the probe zeta")
    return direction, zeta, branches


# -- frequency sweeps ---------------------------------------------------------------

@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    I_alpha: float
    result: OptimizeResult | None
    upper_bound: float
    error: str | None = None


def sweep_I(alphas, config: OptimizeConfig, workers: int = 1) -> list:
    """Trace the optimal decay rate over a list of frequencies.

    Per-alpha failures are recorded and the sweep continues; entries come
    back sorted to match the input order.
    """
    def run(alpha: float) -> SweepEntry:
        cfg = OptimizeConfig(
            alpha=alpha, bounds=config.bounds, n_cells=config.n_cells,
            step0=config.step0, step_grow=config.step_grow,
            step_shrink=config.step_shrink, max_iters=config.max_iters,
            tol_freq=config.tol_freq, tol_grad=config.tol_grad,
            round_threshold=config.round_threshold)
        ub = constant_upper_bound(alpha, cfg.bounds)
        try:
            res = minimize_im_at_frequency(cfg)
            return SweepEntry(alpha, res.kappa.imag, res, ub)
        except QnmOptError as exc:
            return SweepEntry(alpha, math.nan, None, ub,
                              f"{type(exc).__name__}: {exc}")

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, alphas))
    return [run(a) for a in alphas]
