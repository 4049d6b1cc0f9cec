import warnings

import numpy as np
import pytest


def random_psd(rng, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank))
    return scale * G @ G.T / rank


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_gamma_warning():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="gamma=.*< 1")
        yield


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
