import numpy as np
import pytest

from kvlif.neurons import NeuronParams, paper_params


@pytest.fixture
def p() -> NeuronParams:
    return paper_params()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


# criterion number -> (passed, description); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
