import numpy as np
import pytest

from menuabc.simulator import ModelParameters, train_policy


@pytest.fixture(scope="session")
def baseline_params():
    return ModelParameters(f_dur=300.0, variant="baseline")


@pytest.fixture(scope="session")
def baseline_policy(baseline_params):
    return train_policy(baseline_params, 100_000, rng=np.random.default_rng(0))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod and mod.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
