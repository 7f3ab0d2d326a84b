import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from nkfb.quantum import bloch_to_density

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

EQUATOR = np.array([1 / np.sqrt(2), 1 / np.sqrt(2), 0.0])

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def hermitian(draw, d=2, scale=3.0):
    vals = draw(st.lists(st.floats(-scale, scale, allow_nan=False), min_size=d * d, max_size=d * d))
    a = np.array(vals).reshape(d, d)
    re = np.triu(a)
    im = np.triu(a.T, 1)
    H = re + re.T - np.diag(np.diag(re)) + 1j * (im - im.T)
    return H


@st.composite
def bloch_vectors(draw, pure=False):
    v = np.array(draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3)))
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([0.0, 0.0, 1.0]), 1.0
    r = 1.0 if pure else draw(st.floats(0, 1))
    return v / n * r


@st.composite
def densities(draw, d=2):
    if d == 2:
        return bloch_to_density(draw(bloch_vectors()))
    vals = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=2 * d * d, max_size=2 * d * d))
    a = np.array(vals[: d * d]).reshape(d, d) + 1j * np.array(vals[d * d :]).reshape(d, d)
    rho = a @ a.conj().T + 1e-3 * np.eye(d)
    return rho / np.trace(rho).real


@pytest.fixture
def rho_equator():
    return bloch_to_density(EQUATOR)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        LINES = mod.LINES
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
