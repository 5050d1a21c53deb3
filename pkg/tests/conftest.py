import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from persistplan.featuregen import BandConfig, generate_band  # noqa: E402


@pytest.fixture(scope="session")
def small_band():
    return generate_band(BandConfig(0.65, 200, 30, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance report

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if call.when == "setup" and call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception):
        outcome = "gated"
    elif call.when == "call":
        if call.excinfo is None:
            outcome = "pass"
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            outcome = "gated"
        else:
            outcome = "fail"
    else:
        return
    num, title = m.args
    entry = _CRITERIA.setdefault(num, {"title": title, "outcomes": []})
    entry["outcomes"].append((item.name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        outs = [o for _, o in e["outcomes"]]
        if "fail" in outs:
            status = "FAIL"
        elif all(o == "gated" for o in outs):
            status = "GATED"
        elif "gated" in outs:
            status = "PASS (full-scale part gated)"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {num}: {status:<30} {e['title']}")
