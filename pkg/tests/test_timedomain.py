import math

import numpy as np
import pytest

from qnmopt.errors import CFLViolation, DegenerateMedium
from qnmopt.medium import AdmissibleBounds, PiecewiseStructure, constant
from qnmopt.timedomain import excite_and_fit, simulate

from conftest import LN3_4


def gaussian_pulse(m_cells, center=0.35, width=0.07):
    xs = np.linspace(0.0, 1.0, m_cells + 1)
    f = np.exp(-((xs - center) / width) ** 2)
    fp = -2.0 * (xs - center) / width ** 2 * f
    return f, -fp  # rightward mover: u = f(x - t)


class TestSimulate:
    def test_unit_medium_transparency(self):
        B = constant(1.0, AdmissibleBounds(1, 4))
        m = 2048
        u0, v0 = gaussian_pulse(m)
        sim = simulate(B, u0, v0, 3.0, m)
        assert sim.energies[-1] / sim.energies[0] < 1e-6

    def test_zero_data(self):
        B = constant(1.0, AdmissibleBounds(1, 4))
        sim = simulate(B, np.zeros(257), np.zeros(257), 0.5, 256)
        assert np.all(sim.energies == 0.0)

    def test_energy_nonincreasing(self):
        B = PiecewiseStructure((0.0, 0.4, 1.0), (4.0, 1.0),
                               AdmissibleBounds(1, 4))
        m = 1024
        u0, v0 = gaussian_pulse(m, center=0.5, width=0.1)
        sim = simulate(B, u0, v0, 4.0, m)
        worst = np.max(np.diff(sim.energies))
        assert worst <= 1e-12 * sim.energies[0]

    def test_cfl_violation(self):
        B = constant(4.0, AdmissibleBounds(1, 4))
        with pytest.raises(CFLViolation):
            simulate(B, np.zeros(129), np.zeros(129), 1.0, 128,
                     dt=1.0 / 128.0 * 2.1)

    def test_degenerate_medium_refused(self):
        bounds = AdmissibleBounds(0.0, 4.0)
        B = PiecewiseStructure((0.0, 0.3, 1.0), (0.0, 4.0), bounds)
        with pytest.raises(DegenerateMedium):
            simulate(B, np.zeros(129), np.zeros(129), 1.0, 128)


class TestExciteAndFit:
    def test_b4_mode_decay(self):
        B = constant(4.0, AdmissibleBounds(1, 4))
        kappa = math.pi + 1j * LN3_4
        fit = excite_and_fit(B, kappa, 15.0, 1024)
        assert 0.95 <= fit.beta / fit.expected <= 1.05
        assert fit.expected == pytest.approx(2 * LN3_4)

    def test_refinement_improves(self):
        B = constant(4.0, AdmissibleBounds(1, 4))
        kappa = math.pi + 1j * LN3_4
        d = [abs(excite_and_fit(B, kappa, 12.0, m).beta / (2 * LN3_4) - 1)
             for m in (512, 1024)]
        assert d[1] < d[0]
