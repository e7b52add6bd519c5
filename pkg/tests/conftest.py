from __future__ import annotations

import sys

import pytest

from fixpoint_lab.maps_gallery import catalog_get
from fixpoint_lab.metric_core import sample_set


@pytest.fixture(scope="session")
def piecewise():
    return catalog_get("piecewise_kannan").map


@pytest.fixture(scope="session")
def piecewise_samples(piecewise):
    return sample_set(piecewise.space, 1000, 10_000, seed=1)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", {})
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(verdicts):
            terminalreporter.write_line(verdicts[number])
