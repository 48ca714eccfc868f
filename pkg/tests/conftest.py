import numpy as np
import pytest

from pelastica import _kernels as kern
from pelastica.flatcore import FlatCoreSpec

E2 = [0.0, 1.0]
NEG_E2 = [0.0, -1.0]


@pytest.fixture(params=["numba", "numpy"])
def any_backend(request):
    with kern.use_backend(request.param):
        yield request.param


@pytest.fixture
def quasi_spec():
    return FlatCoreSpec(3, 2, [E2, E2], [1, 0, 1])


@pytest.fixture
def alt_spec():
    return FlatCoreSpec(3, 2, [E2, NEG_E2], [1, 1, 1])


def spec3(segs=(1, 0, 1), sigmas=((0, 1, 0), (0, 1, 0)), p=3.0):
    return FlatCoreSpec(p, 3, [list(s) for s in sigmas], list(segs))


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
