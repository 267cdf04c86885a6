import numpy as np
import pytest

from cogmap import CognitiveModel

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(name, ok, detail=""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))


def matrix_model(a, names=None):
    a = np.asarray(a, dtype=float)
    names = names or [chr(ord("a") + i) if a.shape[0] <= 26 else f"v{i:02d}" for i in range(a.shape[0])]
    return CognitiveModel.from_matrix(names, a)


def random_contractive(rng, n, rho_max=0.9, density=None):
    """Random signed zero-diagonal matrix rescaled so rho(A) = U(0.05, rho_max), via dense eigvals."""
    density = rng.uniform(0.1, 1.0) if density is None else density
    a = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(a, 0.0)
    rho = np.abs(np.linalg.eigvals(a)).max() if n else 0.0
    if rho > 1e-8:
        a *= rng.uniform(0.05, rho_max) / rho
    return a


@pytest.fixture
def two_cycle():
    return matrix_model([[0, 0.5], [0.5, 0]])


@pytest.fixture
def single_edge():
    return matrix_model([[0, -0.6], [0, 0]])
