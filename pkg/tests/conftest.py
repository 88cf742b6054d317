import numpy as np
import pytest

from pssmp_lab import LevyModel, TwoSidedExponential
from pssmp_lab.levy_model import ConstantJump, GaussianJump

BM = LevyModel(0.5, 1.0)
KOU_KILLED = LevyModel(0.5, 1.0, 1.0, TwoSidedExponential(0.5, 3.0, 3.0), 0.2)
KOU_LC3 = LevyModel(0.5, 1.0, 1.0, TwoSidedExponential(0.5, 3.0, 3.0))
SPEC_POS = LevyModel(0.2, 1.0, 1.0, TwoSidedExponential(1.0, 2.0, 2.0))
GAUSS = LevyModel(0.3, 0.7, 2.0, GaussianJump(-0.1, 0.4))
CONST = LevyModel(-0.2, 0.5, 1.5, ConstantJump(0.4), 0.1)

MODELS = {"bm": BM, "kou_killed": KOU_KILLED, "kou_lc3": KOU_LC3, "spec_pos": SPEC_POS,
          "gauss": GAUSS, "const": CONST}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines are collected here and echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
