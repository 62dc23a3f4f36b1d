import math

import numpy as np
import pytest

from qnmopt.certificate import (nonlinear_residual, phase_trace,
                                self_consistent_solve, switch_alignment)
from qnmopt.errors import NotAtRoot, NotBangBang, OnImaginaryAxis
from qnmopt.medium import AdmissibleBounds, PiecewiseStructure, constant
from qnmopt.spectrum import SpectralWindow, locate, newton_refine

from conftest import LN3_4


class TestPhaseTrace:
    def test_decreasing_for_positive_frequency(self):
        B = constant(4.0)
        kappa = math.pi + 1j * LN3_4
        tr = phase_trace(B, kappa)
        assert tr.xi[0] == 0.0
        assert tr.xi_prime_sign == -1
        assert np.all(np.diff(tr.xi) <= 1e-12)
        # interior samples strictly decreasing
        inner = (tr.xs > 0.05) & (tr.xs <= 1.0)
        assert np.all(np.diff(tr.xi[inner]) < 0)

    def test_increasing_for_mirror(self):
        B = constant(4.0)
        kappa = -math.pi + 1j * LN3_4
        tr = phase_trace(B, kappa)
        assert tr.xi_prime_sign == 1
        assert np.all(np.diff(tr.xi) >= -1e-12)

    def test_leading_zero_interval_flat(self):
        bounds = AdmissibleBounds(0.0, 4.0)
        B = PiecewiseStructure((0.0, 0.3, 1.0), (0.0, 4.0), bounds)
        evs = locate(B, SpectralWindow(0.5, 5.0, 0.05, 2.5))
        assert evs
        tr = phase_trace(B, evs[0].kappa)
        assert tr.a1 == 0.3
        flat = tr.xs <= 0.3 + 1e-12
        assert np.max(np.abs(tr.xi[flat])) < 1e-12

    def test_requires_root(self):
        with pytest.raises(NotAtRoot):
            phase_trace(constant(4.0), 1.0 + 0.5j)


class TestSwitchAlignment:
    def test_optimum_aligns(self, pi_optimum):
        cert = switch_alignment(pi_optimum.polished,
                                pi_optimum.polished_kappa)
        assert cert.max_deviation < 0.05
        assert cert.max_interval_variation <= math.pi + 0.05
        assert -math.pi <= cert.omega < math.pi
        assert cert.nonlinear_mismatch < 0.02

    def test_displaced_switch_detected(self, pi_optimum):
        B, kappa = pi_optimum.polished, pi_optimum.polished_kappa
        pts = list(B.breakpoints)
        pts[1] += 0.05
        B2 = PiecewiseStructure(tuple(pts), B.values, B.bounds)
        k2 = newton_refine(B2, kappa, tol=1e-10, leash=0.5)[0]
        cert = switch_alignment(B2, k2)
        assert cert.max_deviation > 0.1

    def test_constant_medium_reports_variation(self):
        B = constant(4.0, AdmissibleBounds(1, 4))
        kappa = math.pi + 1j * LN3_4
        cert = switch_alignment(B, kappa)
        assert cert.deviations == ()
        # the non-optimal constant medium fails the interval bound
        assert cert.max_interval_variation > math.pi + 0.05

    def test_mirror_consistency(self, pi_optimum):
        B, kappa = pi_optimum.polished, pi_optimum.polished_kappa
        cert = switch_alignment(B, kappa)
        mirror = switch_alignment(B, -kappa.conjugate())
        d_omega = (mirror.omega + cert.omega + math.pi) % (2 * math.pi) - math.pi
        assert abs(d_omega) < 1e-9
        assert mirror.max_deviation < 0.05
        assert abs(mirror.max_interval_variation
                   - cert.max_interval_variation) < 1e-9

    def test_rejects_axis_and_interior_values(self, box14):
        with pytest.raises(OnImaginaryAxis):
            switch_alignment(constant(4.0, box14), 1j * LN3_4)
        B = PiecewiseStructure((0.0, 0.5, 1.0), (2.0, 4.0), box14)
        with pytest.raises(NotBangBang):
            switch_alignment(B, 1.0 + 0.5j)


class TestNonlinearResidual:
    def test_axis_optimum_zero_mismatch(self, box14):
        B = constant(4.0, box14)
        theta, mismatch = nonlinear_residual(B, 1j * LN3_4)
        assert theta == pytest.approx(math.pi / 4)
        assert mismatch == 0.0

    def test_certified_optimum_small(self, pi_optimum):
        theta, mismatch = nonlinear_residual(pi_optimum.polished,
                                             pi_optimum.polished_kappa)
        assert mismatch < 0.02

    def test_non_optimal_reported_large(self, box14):
        B = PiecewiseStructure((0.0, 0.5, 1.0), (4.0, 1.0), box14)
        evs = locate(B, SpectralWindow(0.5, 6.0, 0.05, 2.0))
        _, mismatch = nonlinear_residual(B, evs[0].kappa)
        assert mismatch > 0.05  # diagnostic only: clearly non-optimal


class TestDegenerateLowerBound:
    """b1 = 0 media: leading zero intervals and the real-ray convention."""

    def test_optimum_with_vacuum_layers_certifies(self):
        from qnmopt.optimize import OptimizeConfig, minimize_im_at_frequency
        bounds = AdmissibleBounds(0.0, 4.0)
        cfg = OptimizeConfig(alpha=math.pi, bounds=bounds, n_cells=128,
                             max_iters=400)
        res = minimize_im_at_frequency(cfg)
        assert set(res.polished.values) <= {0.0, 4.0}
        cert = switch_alignment(res.polished, res.polished_kappa)
        assert cert.max_deviation < 0.05
        assert cert.nonlinear_mismatch < 0.02
        sc = self_consistent_solve(res.polished_kappa, bounds, n_grid=1024,
                                   B0=res.polished)
        assert abs(sc.kappa - res.polished_kappa) < 1e-8

    def test_leading_zero_interval_machinery(self):
        from qnmopt.certificate import (_rebuild_structure, certificate_theta,
                                        _omega_from_trace)
        from qnmopt.medium import switch_points
        bounds = AdmissibleBounds(0.0, 4.0)
        B = PiecewiseStructure((0.0, 0.25, 0.55, 0.8, 1.0),
                               (0.0, 4.0, 0.0, 4.0), bounds)
        ev = locate(B, SpectralWindow(2.0, 4.5, 0.05, 2.0))[0]
        tr = phase_trace(B, ev.kappa)
        assert tr.a1 == 0.25
        # the mode is exactly 1 on the empty leading interval
        assert np.max(np.abs(tr.xi[tr.xs <= 0.25])) == 0.0
        omega = _omega_from_trace(tr, switch_points(B), 0.0)
        assert omega == 0.0  # switches of the degenerate family sit on R
        theta = certificate_theta(ev.kappa, omega, 0.0, tr.a1)
        assert theta == pytest.approx(-math.pi / 2)
        # the reconstruction preserves the leading zero interval; the switch
        # there is a tangential touch of Im y^2 = 0 (quadratic growth), so
        # the bisected location carries a ~sqrt(eps) boundary fuzz
        rebuilt = _rebuild_structure(B, ev.kappa, theta, bounds, 1024)
        assert rebuilt.breakpoints[1] == pytest.approx(0.25, abs=1e-7)
        assert rebuilt.values[0] == 0.0


class TestSelfConsistent:
    def test_fixed_point_matches_optimizer(self, box14, pi_optimum):
        res = self_consistent_solve(pi_optimum.polished_kappa, box14,
                                    n_grid=2048, B0=pi_optimum.polished)
        assert len(res.history) <= 20
        assert abs(res.kappa - pi_optimum.polished_kappa) < 1e-8
        _, mismatch = nonlinear_residual(res.B, res.kappa)
        assert mismatch < 1e-3

    def test_axis_seed_reaches_constant_b2(self, box14):
        res = self_consistent_solve(0.27j, box14, n_grid=512)
        assert res.B.values == (4.0,)
        assert abs(res.kappa - 1j * LN3_4) < 1e-10

    def test_y_satisfies_boundary_conditions(self, box14, pi_optimum):
        res = self_consistent_solve(pi_optimum.polished_kappa, box14,
                                    n_grid=1024, B0=pi_optimum.polished)
        from qnmopt.field import charF
        assert abs(charF(res.kappa, res.B)) < 1e-8
        # y = e^{i theta} phi: y(0) = e^{i theta}
        assert abs(res.y[0] - np.exp(1j * res.theta)) < 1e-12
