import numpy as np
import pytest

from resource_action.config import Config
from resource_action.quantum.qmath import DephasingBasis, HilbertFactorization
from resource_action.quantum.reference import TWO_QUBIT_ENDPOINTS, two_qubit_family
from resource_action.quantum.resources import Bipartition, PotentialSpec
from resource_action.quantum.statefam import HamiltonianFamily
from resource_action.solver.problem import ActionProblem


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_family(rng, dims=(2, 2), m=2):
    dim = int(np.prod(dims))
    generators = np.stack([random_hermitian(rng, dim, 0.5) for _ in range(m)])
    return HamiltonianFamily(generators, random_state(rng, dim), HilbertFactorization(dims))


def two_qubit_spec(kind):
    fact = HilbertFactorization((2, 2))
    return PotentialSpec(kind, Bipartition(fact, (0,)), DephasingBasis.computational(4))


def two_qubit_problem(kind="entanglement", kinetic="K2", lambda_A=None, lambda_B=None):
    start, end = TWO_QUBIT_ENDPOINTS
    return ActionProblem(
        two_qubit_family(),
        kinetic,
        two_qubit_spec(kind),
        start if lambda_A is None else lambda_A,
        end if lambda_B is None else lambda_B,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def two_qubit():
    return two_qubit_family()


@pytest.fixture
def app_config(tmp_path, monkeypatch):
    monkeypatch.setenv("RESOURCE_ACTION_HOME", str(tmp_path / "settings"))
    return Config()
