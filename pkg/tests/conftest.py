import math

import numpy as np
import pytest

from qnmopt.medium import AdmissibleBounds, random_bang_bang

# ln 3 / 4: imaginary part of every eigenvalue of the constant medium B = 4
LN3_4 = math.log(3.0) / 4.0

# frozen two-layer seed that converges to a double eigenvalue (diagnostic
# fixture; values lie outside typical boxes on purpose)
DOUBLE_SEED = (0.7125, 4.0, 1.4792)
DOUBLE_KAPPA_SEED = 4.44244 + 1.03017j

# axis variant: tangency of the real characteristic function
AXIS_DOUBLE_SEED = (0.3, 9.0, 0.25)
AXIS_DOUBLE_KAPPA_SEED = 0.70637j


@pytest.fixture(scope="session")
def box14() -> AdmissibleBounds:
    return AdmissibleBounds(1.0, 4.0)


@pytest.fixture(scope="session")
def random_structures(box14):
    rng = np.random.default_rng(20240817)
    return [random_bang_bang(box14, rng) for _ in range(10)]


@pytest.fixture(scope="session")
def double_fixture():
    from qnmopt.sensitivity import find_double_eigenvalue
    return find_double_eigenvalue(DOUBLE_SEED, DOUBLE_KAPPA_SEED)


@pytest.fixture(scope="session")
def pi_optimum(box14):
    """alpha = pi optimization at acceptance scale, shared across tests."""
    from qnmopt.optimize import OptimizeConfig, minimize_im_at_frequency
    cfg = OptimizeConfig(alpha=math.pi, bounds=box14, n_cells=256,
                         max_iters=400)
    return minimize_im_at_frequency(cfg)
