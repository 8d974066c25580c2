import numpy as np
import pytest

from tritype.core import ModelConfig
from tritype.dynamics import integrate, perturbed_field, tournament_field
from tritype.engine import run


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the njit kernels once so timed tests measure steady state."""
    run(ModelConfig(rule_name="perturbed_rps", h=0.05, steps=200, seed=1,
                    record_interval=100))
    run(ModelConfig(rule_name="tournament4", steps=200, seed=1,
                    record_interval=100))
    run(ModelConfig(rule_name="rps", steps=50, seed=1, mode="graph",
                    record_interval=50))
    integrate(perturbed_field(0.05), (0.4, 0.3, 0.3), 0.01, 10)
    integrate(tournament_field(), (0.4, 0.3, 0.3), 0.01, 10)


def random_interior_points(n: int, seed: int = 12345) -> np.ndarray:
    """Uniform points on the open simplex (Dirichlet(1,1,1))."""
    return np.random.default_rng(seed).dirichlet((1.0, 1.0, 1.0), n)
