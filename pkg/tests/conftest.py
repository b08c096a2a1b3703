from pathlib import Path

import numpy as np
import pytest

from hydroindex.synthetic import AMAZON_WEEKLY, simulate, weekly_dates

DATA = Path(__file__).parent / "data"


@pytest.fixture
def golden_csv():
    return DATA / "golden_weekly.csv"


@pytest.fixture
def weekly_series():
    return simulate(AMAZON_WEEKLY, weekly_dates(), np.random.default_rng(11))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
