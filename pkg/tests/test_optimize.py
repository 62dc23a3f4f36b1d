import cmath
import math

import numpy as np
import pytest

from qnmopt.errors import InfeasibleError, InputError, StalledDirection
from qnmopt.field import charF, dzF
from qnmopt.medium import (AdmissibleBounds, GridStructure, constant,
                           extremality_measure, random_bang_bang, to_grid)
from qnmopt.optimize import (OptimizeConfig, best_constant_seed,
                             constant_upper_bound, minimize_im_at_frequency,
                             multiple_eigenvalue_escape, step_direction,
                             sweep_I)
from qnmopt.sensitivity import GradientDensity, eigenvalue_gradient
from qnmopt.spectrum import SpectralWindow, locate

from conftest import LN3_4


class TestSeeding:
    def test_constant_upper_bound_at_pi(self, box14):
        # only b = 4 resonates exactly at pi inside [1, 4]
        assert abs(constant_upper_bound(math.pi, box14) - LN3_4) < 1e-14
        b, k = best_constant_seed(math.pi, box14)
        assert b == 4.0 and abs(k - (math.pi + 1j * LN3_4)) < 1e-14

    def test_infeasible_box(self):
        with pytest.raises(InfeasibleError):
            best_constant_seed(0.0, AdmissibleBounds(0.2, 0.9))


class TestStepDirection:
    def test_orthogonal_interior(self, box14):
        # Re g and Im g orthogonal in L2: lambda = 0, direction = -Im g
        g = GradientDensity(1 + 1j, (1.0 + 1.0j, -1.0 + 1.0j), 1.0)
        B = GridStructure((2.0, 2.0), box14)
        d = step_direction(g, B, box14).as_array()
        assert np.allclose(d, [-1.0, -1.0])

    def test_blocked_at_upper_bound(self, box14):
        # -Im g > 0 everywhere but B = b2: no feasible descent
        g = GradientDensity(1 + 1j, (0.0 - 1.0j, 0.0 - 2.0j), 1.0)
        B = GridStructure((4.0, 4.0), box14)
        with pytest.raises(StalledDirection):
            step_direction(g, B, box14)

    def test_generic_contracts(self, box14, random_structures):
        from qnmopt.spectrum import newton_refine
        w = SpectralWindow(0.5, 6.0, 0.05, 2.0)
        B_pc = random_structures[0]
        ev = locate(B_pc, w)[0]
        n = 48
        B = to_grid(B_pc, n)  # cell averages shift the root slightly
        kappa = newton_refine(B, ev.kappa, tol=1e-12, leash=0.3)[0]
        g = eigenvalue_gradient(B, kappa)
        d = step_direction(g, B, box14).as_array()
        ga = g.as_array()
        assert abs(float(np.dot(ga.real, d)) / n) < 1e-10
        assert float(np.dot(ga.imag, d)) / n < 0.0
        assert np.max(np.abs(d)) <= 1.0 + 1e-12
        vals = B.as_array()
        assert np.all(d[vals <= box14.b1 + 1e-12] >= 0.0)
        assert np.all(d[vals >= box14.b2 - 1e-12] <= 0.0)


class TestAxisOptimization:
    def test_reaches_b2_from_midpoint(self, box14):
        cfg = OptimizeConfig(alpha=0.0, bounds=box14, n_cells=64,
                             max_iters=200)
        res = minimize_im_at_frequency(cfg, to_grid(constant(2.5, box14), 64))
        assert abs(res.kappa.imag - LN3_4) < 1e-6
        assert res.kappa.real == 0.0
        assert np.allclose(res.B.as_array(), 4.0)
        objs = [r.objective for r in res.trajectory]
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))

    def test_positive_objective_all_iterates(self, box14):
        cfg = OptimizeConfig(alpha=0.0, bounds=box14, n_cells=32,
                             max_iters=100)
        res = minimize_im_at_frequency(cfg)
        assert all(r.objective > 0 for r in res.trajectory)

    def test_general_formula_other_box(self):
        bounds = AdmissibleBounds(1.0, 9.0)
        cfg = OptimizeConfig(alpha=0.0, bounds=bounds, n_cells=32,
                             max_iters=200)
        res = minimize_im_at_frequency(cfg, to_grid(constant(3.0, bounds), 32))
        want = math.log((3.0 + 1) / (3.0 - 1)) / (2 * 3.0)  # b2 = 9
        assert abs(res.kappa.imag - want) < 1e-6


class TestFrequencyPinning:
    def test_small_run_stays_pinned(self, box14):
        cfg = OptimizeConfig(alpha=math.pi, bounds=box14, n_cells=48,
                             max_iters=40)
        res = minimize_im_at_frequency(cfg)
        assert abs(res.kappa.real - math.pi) <= cfg.tol_freq
        objs = [r.objective for r in res.trajectory]
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
        assert all(r.objective > 0 for r in res.trajectory)

    def test_finalization_reports_both(self, pi_optimum):
        res = pi_optimum
        assert res.rounded is not None and res.rounded_kappa is not None
        assert res.polished is not None and res.polished_kappa is not None
        assert res.polished.is_bang_bang()
        assert abs(res.polished_kappa.real - math.pi) < 1e-9


class TestEscape:
    def test_requires_multiplicity(self, box14, double_fixture):
        B, kappa = double_fixture
        with pytest.raises(InputError):
            multiple_eigenvalue_escape(B, kappa, 1, B.bounds)

    def test_downward_branch_on_fixture(self, double_fixture):
        B, kappa = double_fixture
        direction, zeta, branches = multiple_eigenvalue_escape(
            B, kappa, 2, B.bounds)
        assert zeta > 0
        assert len(branches) == 2
        best = min(branches, key=lambda z: abs(cmath.phase(z - kappa)
                                               + math.pi / 2))
        assert abs(cmath.phase(best - kappa) + math.pi / 2) < math.pi / 4
        assert best.imag < kappa.imag

    def test_axis_branch_stays_on_axis(self):
        from qnmopt.sensitivity import find_double_eigenvalue
        from conftest import AXIS_DOUBLE_KAPPA_SEED, AXIS_DOUBLE_SEED
        B, kappa = find_double_eigenvalue(AXIS_DOUBLE_SEED,
                                          AXIS_DOUBLE_KAPPA_SEED)
        direction, zeta, branches = multiple_eigenvalue_escape(
            B, kappa, 2, B.bounds)
        downward = [z for z in branches if z.imag < kappa.imag]
        assert downward
        assert min(abs(z.real) for z in downward) < 1e-8


class TestConfigValidation:
    def test_invariants(self, box14):
        with pytest.raises(InputError):
            OptimizeConfig(alpha=0.0, bounds=box14, n_cells=8)
        with pytest.raises(InputError):
            OptimizeConfig(alpha=0.0, bounds=box14, step0=0.0)
        with pytest.raises(InputError):
            OptimizeConfig(alpha=0.0, bounds=box14, tol_freq=0.0)


class TestSubUnitBoxSanity:
    def test_no_axis_spectrum_when_b2_below_one(self):
        # desk-scale absence check over the axis segment i [0.05, 20]
        from qnmopt.field import axis_charF
        bounds = AdmissibleBounds(0.2, 0.9)
        rng = np.random.default_rng(77)
        betas = np.linspace(0.05, 20.0, 2000)
        for _ in range(20):
            B = random_bang_bang(bounds, rng)
            gs = np.array([axis_charF(b, B) for b in betas])
            assert np.all(gs > 0.0)  # no sign change: no axis eigenvalue


class TestNearMultipleDetection:
    def test_gradient_refuses_double_root(self, double_fixture):
        from qnmopt.errors import NearMultiple
        B, kappa = double_fixture
        with pytest.raises(NearMultiple):
            eigenvalue_gradient(B, kappa, n_cells=16)


class TestCollisionPath:
    @staticmethod
    def _grid_aligned_double_root():
        # double eigenvalue of a two-layer structure whose interface sits on
        # a 32-cell grid line, so the grid view is exact
        from scipy.optimize import root as scipy_root
        from qnmopt.medium import PiecewiseStructure
        a = 23.0 / 32.0
        wide = AdmissibleBounds(0.0, 8.0)

        def build(v1, v2):
            return PiecewiseStructure((0.0, a, 1.0), (v1, v2), wide)

        def residual(p):
            from qnmopt.field import charF, dzF
            v1, v2, re, im = p
            if v1 <= 0 or v2 <= 0 or im <= 0:
                return [1e3] * 4
            z = complex(re, im)
            B = build(v1, v2)
            f, df = charF(z, B), dzF(z, B)
            return [f.real, f.imag, df.real, df.imag]

        sol = scipy_root(residual, [4.0, 1.52, 4.45, 1.04], tol=1e-13)
        assert sol.success
        v1, v2, re, im = sol.x
        return build(v1, v2), complex(re, im)

    def test_collision_detected_with_partial(self):
        from qnmopt.errors import CollisionDetected
        from qnmopt.field import charF, dzF
        B, kappa = self._grid_aligned_double_root()
        assert abs(charF(kappa, B)) + abs(dzF(kappa, B)) < 1e-10
        seed = to_grid(B, 32)
        with pytest.raises(CollisionDetected) as exc_info:
            minimize_im_at_frequency(
                OptimizeConfig(alpha=kappa.real, bounds=B.bounds, n_cells=32,
                               max_iters=20, seed_kappa=kappa), seed)
        partial = getattr(exc_info.value, "partial", None)
        assert partial is not None
        assert partial.status == "collision"


class TestSweep:
    def test_entries_bounded_and_positive(self, box14):
        cfg = OptimizeConfig(alpha=0.0, bounds=box14, n_cells=48,
                             max_iters=150)
        alphas = [math.pi / 2, math.pi]
        entries = sweep_I(alphas, cfg)
        assert [e.alpha for e in entries] == alphas
        for e in entries:
            assert e.error is None
            assert 0.0 < e.I_alpha <= e.upper_bound + 1e-9

    def test_mirror_symmetry(self, box14):
        cfg = OptimizeConfig(alpha=0.0, bounds=box14, n_cells=48,
                             max_iters=150)
        plus, minus = sweep_I([math.pi, -math.pi], cfg)
        assert abs(plus.I_alpha - minus.I_alpha) < 1e-6

    def test_failures_recorded(self):
        bounds = AdmissibleBounds(0.2, 0.9)
        cfg = OptimizeConfig(alpha=0.0, bounds=bounds, n_cells=32)
        entries = sweep_I([0.1], cfg)
        assert entries[0].error is not None
        assert math.isnan(entries[0].I_alpha)

    def test_threaded_matches_serial(self, box14):
        cfg = OptimizeConfig(alpha=0.0, bounds=box14, n_cells=32,
                             max_iters=60)
        a = sweep_I([math.pi], cfg)
        b = sweep_I([math.pi], cfg, workers=2)
        assert a[0].I_alpha == b[0].I_alpha
