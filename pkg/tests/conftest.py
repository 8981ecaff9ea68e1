import numpy as np
import pytest

from nvcdamage.driver import calibrated_gurson
from nvcdamage.gurson import GursonParams
from nvcdamage.tensor import ElasticConstants
from nvcdamage.traps import TrapParams


@pytest.fixture
def elastic() -> ElasticConstants:
    return ElasticConstants()


@pytest.fixture
def params() -> GursonParams:
    return calibrated_gurson()


@pytest.fixture
def traps() -> TrapParams:
    return TrapParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
