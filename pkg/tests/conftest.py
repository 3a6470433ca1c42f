import pytest

from fopi import BENCH_MOTOR, PiLambdaController, derive_tf
from fopi.quasipoly import FractionalTransferFunction, QuasiPolynomial


@pytest.fixture(scope="session")
def plant():
    return derive_tf(BENCH_MOTOR)


@pytest.fixture(scope="session")
def fo():
    return PiLambdaController(2.5732, 1.45204, 1.2)


@pytest.fixture(scope="session")
def io():
    return PiLambdaController(1.431, 0.72, 1.0)


@pytest.fixture(scope="session")
def first_order():
    # 1 / (s + 1)
    return FractionalTransferFunction(QuasiPolynomial([(1.0, 0.0)]), QuasiPolynomial.from_poly([1.0, 1.0]))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
