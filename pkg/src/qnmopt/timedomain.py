"""Time-domain cross-check: a mode of the open cavity decays at Im kappa.

Explicit leapfrog for B u_tt = u_xx on [0,1] with a reflecting (Neumann)
left end and a first-order absorbing right end (u_x = -u_t, discretized in
the classic one-sided transparent form that is exact for unit-speed
right-movers on the characteristic grid).  The discrete energy
E = 1/2 int (B u_t^2 + u_x^2) is non-increasing, and a simulation excited
with a frequency-domain mode must show log E decaying at twice the mode's
imaginary part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CFLViolation, DegenerateMedium, FitUnstable, InputError
from .field import mode_values
from .medium import PiecewiseStructure

__all__ = ["SimResult", "simulate", "excite_and_fit", "FitResult",
           "CFL_SAFETY"]

CFL_SAFETY = 0.9


@dataclass(frozen=True)
class SimResult:
    times: np.ndarray
    energies: np.ndarray
    probe: np.ndarray            # u at the probe node per recorded step
    dt: float
    dx: float


def _node_coefficients(B: PiecewiseStructure, m_cells: int) -> np.ndarray:
    """B sampled at grid nodes (breakpoint nodes take the side average)."""
    xs = np.linspace(0.0, 1.0, m_cells + 1)
    h = 1.0 / m_cells
    left = np.array([B.value_at(max(x - 0.25 * h, 0.0)) for x in xs])
    right = np.array([B.value_at(min(x + 0.25 * h, 1.0)) for x in xs])
    return 0.5 * (left + right)


def simulate(B: PiecewiseStructure, u0, v0, T: float, m_cells: int,
             dt: float | None = None, probe_index: int = 0) -> SimResult:
    """Leapfrog run until time T on m_cells uniform cells.

    u0, v0 are node arrays of length m_cells + 1 (displacement and
    velocity).  dt defaults to the CFL-safe value 0.9 dx sqrt(min B);
    a caller-supplied dt beyond that bound raises CFLViolation.
    """
    bn = _node_coefficients(B, m_cells)
    if float(np.min(bn)) <= 0.0 or B.inf() <= 0.0:
        raise DegenerateMedium("simulation requires min B > 0")
    h = 1.0 / m_cells
    dt_max = CFL_SAFETY * h * math.sqrt(B.inf())
    if dt is None:
        dt = dt_max
    elif dt > dt_max * (1.0 + 1e-12):
        raise CFLViolation(f"dt = {dt:.3e} exceeds {dt_max:.3e}")

    u_prev = np.asarray(u0, dtype=float).copy()
    v_init = np.asarray(v0, dtype=float)
    if u_prev.shape != (m_cells + 1,) or v_init.shape != (m_cells + 1,):
        raise InputError("u0 and v0 must be node arrays of length m_cells+1")

    lam2 = dt ** 2 / (h ** 2 * bn)
    # radiating end: u_x = -u_t with unit impedance irrespective of B(1);
    # time-centered one-sided form (exact for B = 1 on the dt = h grid)
    mur = (dt - h) / (dt + h)

    def lap(u: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        out[0] = 2.0 * (u[1] - u[0])        # Neumann ghost u[-1] = u[1]
        out[-1] = 0.0                        # boundary handled by Mur update
        return out

    # leapfrog start: u at t = dt from a Taylor step
    u = u_prev + dt * v_init + 0.5 * lam2 * lap(u_prev)
    u[-1] = u_prev[-2] + mur * (u[-2] - u_prev[-1])

    n_steps = int(math.ceil(T / dt))
    times = np.empty(n_steps)
    energies = np.empty(n_steps)
    probe = np.empty(n_steps)
    w = np.ones(m_cells + 1)
    w[0] = w[-1] = 0.5

    for n in range(n_steps):
        # staggered (conserved-form) energy at t = (n + 1/2) dt
        vt = (u - u_prev) / dt
        du_new = np.diff(u) / h
        du_old = np.diff(u_prev) / h
        energies[n] = 0.5 * h * (float(np.dot(w * bn, vt * vt))
                                 + float(np.dot(du_new, du_old)))
        times[n] = (n + 0.5) * dt
        probe[n] = u[probe_index]

        u_next = 2.0 * u - u_prev + lam2 * lap(u)
        u_next[-1] = u[-2] + mur * (u_next[-2] - u[-1])
        u_prev, u = u, u_next

    return SimResult(times, energies, probe, dt, h)


@dataclass(frozen=True)
class FitResult:
    beta: float                 # fitted energy decay rate (log E slope, negated)
    expected: float             # 2 Im kappa
    rel_residual: float         # rms residual of the linear fit / slope span
    window: tuple


def excite_and_fit(B: PiecewiseStructure, kappa: complex, T: float,
                   m_cells: int, fit_window: tuple = (0.15, 0.9),
                   max_rel_residual: float = 0.05) -> FitResult:
    """Initialize with Re(phi), Re(i kappa phi) and fit the energy decay.

    The fitted slope of log E approximates 2 Im kappa (energy is quadratic
    in amplitude).  A log-energy trace that is not straight over the fit
    window (mode mixing, under-resolved grid) raises FitUnstable.
    """
    xs = np.linspace(0.0, 1.0, m_cells + 1)
    phi, _ = mode_values(B, kappa, xs)
    u0 = phi.real.copy()
    v0 = (1j * kappa * phi).real.copy()
    sim = simulate(B, u0, v0, T, m_cells)

    # the real field carries an interference term at frequency 2 Re kappa;
    # averaging E over exactly one oscillation period leaves the pure decay
    times, energies = sim.times, sim.energies
    if kappa.real != 0.0:
        period = math.pi / abs(kappa.real)
        p = int(round(period / sim.dt))
        if p >= 2:
            kern = np.ones(p) / p
            energies = np.convolve(energies, kern, mode="valid")
            times = times[p - 1:] - 0.5 * (p - 1) * sim.dt

    t0, t1 = fit_window[0] * T, fit_window[1] * T
    sel = (times >= t0) & (times <= t1)
    ts = times[sel]
    es = energies[sel]
    if np.any(es <= 0.0) or len(ts) < 16:
        raise FitUnstable("energy reached zero or too few samples to fit")
    logs = np.log(es)
    a, b = np.polyfit(ts, logs, 1)
    resid = logs - (a * ts + b)
    span = abs(a) * (ts[-1] - ts[0])
    rel = float(np.sqrt(np.mean(resid ** 2))) / max(span, 1e-300)
    if rel > max_rel_residual:
        raise FitUnstable(
            f"log-energy trace nonlinear (rel residual {rel:.3e})")
    return FitResult(beta=float(-a), expected=2.0 * kappa.imag,
                     rel_residual=rel, window=(t0, t1))
