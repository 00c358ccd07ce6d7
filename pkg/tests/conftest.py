import numpy as np
import pytest

from hldsnotes.hlds import HldsConfig, build_joint_model

# acceptance outcomes, printed at the end of the run
CRITERIA: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    CRITERIA[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, passed, detail = CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}" + (f"  ({detail})" if detail else ""))


@pytest.fixture(scope="session")
def default_model():
    return build_joint_model(HldsConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_system(rng, d, m):
    """Random model with a spectral radius below 1.05 and well-conditioned noise."""
    from hldsnotes.statespace import LinearModel

    F = rng.normal(size=(d, d))
    F *= rng.uniform(0.3, 1.05) / max(np.max(np.abs(np.linalg.eigvals(F))), 1e-12)
    H = rng.normal(size=(m, d))
    A = rng.normal(size=(d, d))
    Q = A @ A.T / d + 0.05 * np.eye(d)
    B = rng.normal(size=(m, m))
    R = B @ B.T / m + 0.1 * np.eye(m)
    return LinearModel(F, H, Q, R)
