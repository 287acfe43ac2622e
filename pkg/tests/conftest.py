import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mgdsolve.blocks import BlockSystem
from mgdsolve.sparse import CsrMatrix

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def scalar(v):
    return CsrMatrix.from_dense(np.array([[float(v)]]))


def random_sparse(rng, n_rows, n_cols, density=0.3):
    a = rng.standard_normal((n_rows, n_cols))
    a[rng.random((n_rows, n_cols)) > density] = 0.0
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scalar_system():
    """G=1, N=1: A_1=2, A_E=3, A_I=4, every coupling -1."""
    return BlockSystem([scalar(2), scalar(3), scalar(4)], [[-1.0]], [[-1.0]], [-1.0])


_ACCEPTANCE = {}


def record_acceptance(number, ok, detail):
    _ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
