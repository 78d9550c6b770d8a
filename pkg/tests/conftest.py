import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

PRESETS = Path(__file__).resolve().parents[1] / "src" / "semcodebook" / "presets"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def presets():
    return PRESETS


# --- acceptance summary ----------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    detail = "; ".join(f"{k}={v}" for k, v in rep.user_properties)
    prior = _ACCEPTANCE.get(number)
    ok = rep.passed and (prior is None or prior[1])
    _ACCEPTANCE[number] = (title, ok, detail or (prior[2] if prior else ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        line = f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
