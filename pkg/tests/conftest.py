import numpy as np
import pytest

from nssp.spectral import GridSpec, RealField, SpectralField, from_function, leray_project, to_spectral

ACCEPTANCE_LINES: list[str] = []


def random_field(grid: GridSpec, seed: int, mean: bool = True) -> SpectralField:
    """Projected white noise over the whole lattice (Nyquist modes removed)."""
    rng = np.random.default_rng(seed)
    u = leray_project(to_spectral(RealField(grid, rng.standard_normal((grid.dim,) + grid.shape))))
    if not mean:
        c = u.coeffs.copy()
        c[(slice(None),) + (0,) * grid.dim] = 0.0
        u = u.replace(c)
    return u


def single_mode(grid: GridSpec, xi, amplitude: float = 1.0) -> SpectralField:
    """amplitude * e cos(xi . x) with a unit vector e orthogonal to xi."""
    xi = np.asarray(xi, dtype=float)
    e = np.zeros(grid.dim)
    e[np.argmin(np.abs(xi))] = 1.0
    e -= xi * (e @ xi) / (xi @ xi)
    e /= np.linalg.norm(e)

    def f(*x):
        phase = sum(k * xx for k, xx in zip(xi, x))
        return tuple(amplitude * c * np.cos(phase) for c in e)

    u = from_function(grid, f)
    # drop rounding noise off the two modes +-xi so supports are exact
    plus = np.ones(grid.spectral_shape, dtype=bool)
    minus = np.ones(grid.spectral_shape, dtype=bool)
    for w, k in zip(grid.wavevector, xi):
        plus &= w == k
        minus &= w == -k
    return u.replace(np.where(plus | minus, u.coeffs, 0.0))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid3():
    return GridSpec(3, 16, 0.05)


@pytest.fixture
def grid2():
    return GridSpec(2, 32, 0.01)
