import numpy as np
import pytest

from rdeeplcc.datagen import collect_archive, generate_excitation
from rdeeplcc.platoon import build_model
from rdeeplcc.zonoset import MatrixZonotope, Zonotope

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def acceptance_log():
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE[number] = line
        print(line)

    return record


def random_zonotope(rng, dim=None, order=None, scale=1.0):
    dim = int(rng.integers(1, 6)) if dim is None else dim
    order = int(rng.integers(0, 8)) if order is None else order
    return Zonotope(rng.normal(size=dim) * scale, rng.normal(size=(dim, order)) * scale)


def random_matzono(rng, rows, cols, order=None):
    order = int(rng.integers(0, 5)) if order is None else order
    return MatrixZonotope(rng.normal(size=(rows, cols)), rng.normal(size=(order, rows, cols)) * 0.3)


@pytest.fixture(scope="session")
def model():
    return build_model(3, 15.0, 0.1)


@pytest.fixture(scope="session")
def linear_archive(model):
    """Noise-free archive from the linearized platoon (T = 1000)."""
    rng = np.random.default_rng(7)
    exc = generate_excitation(1000, 0.2, 0.5, rng)
    return collect_archive(model, exc, 0.0, rng, plant="linear")
