import numpy as np
import pytest
from hypothesis import strategies as st

from swallowtail_qbd.special import ModelParameters


def admissible(a, b, g):
    return a > -1 and b > -1 and g > -1 and a + g + 1.5 > 0 and b + g + 1.5 > 0


@st.composite
def params(draw, lo=-0.95, hi=3.0, gamma_lo=-0.95, gamma_hi=3.0):
    a = draw(st.floats(lo, hi))
    b = draw(st.floats(lo, hi))
    g = draw(st.floats(gamma_lo, gamma_hi))
    if not admissible(a, b, g):
        g = max(g, -1.4 - min(a, b))
    return ModelParameters(a, b, g)


def random_params(rng, count, lo=-0.95, hi=3.0, gammas=()):
    """count admissible triples; the listed gamma values are used first."""
    out = []
    gammas = list(gammas)
    while len(out) < count:
        a, b = rng.uniform(lo, hi, 2)
        g = gammas.pop(0) if gammas else rng.uniform(-0.95, hi)
        if admissible(a, b, g):
            out.append(ModelParameters(float(a), float(b), float(g)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def zero():
    return ModelParameters(0, 0, 0)


# one summary line per acceptance criterion, printed after the run
_ACCEPTANCE = []


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
