from __future__ import annotations

import numpy as np
import pytest

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call: pytest.CallInfo):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        _CRITERIA[cid] = (title, "PASS" if report.passed else "FAIL")


def _criterion_key(cid: str) -> tuple[int, str]:
    digits = "".join(ch for ch in cid if ch.isdigit())
    return int(digits), cid


def pytest_terminal_summary(terminalreporter) -> None:
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=_criterion_key):
        title, status = _CRITERIA[cid]
        terminalreporter.write_line(f"{status}  criterion {cid:<3} {title}")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261014)
