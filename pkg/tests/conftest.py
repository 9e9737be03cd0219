import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, passed: bool, detail: str) -> None:
    """Store one acceptance line; printed in the terminal summary even when output is captured."""
    ACCEPTANCE_LINES.append(f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(rng, d):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, d):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return psi / np.linalg.norm(psi)
