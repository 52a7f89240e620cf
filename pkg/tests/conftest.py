import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_NOTES: dict = {}
_OUTCOMES: dict = {}
_CRITERION = re.compile(r"test_c(\d+)_(\w+)")


@pytest.fixture
def note(request):
    """Attach a measurement line to the running acceptance criterion."""
    def add(text):
        _NOTES.setdefault(request.node.name, []).append(str(text))
    return add


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        if _CRITERION.match(name):
            _OUTCOMES[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_OUTCOMES, key=lambda s: int(_CRITERION.match(s).group(1))):
        num, label = _CRITERION.match(name).groups()
        status = "PASS" if _OUTCOMES[name] == "passed" else "FAIL"
        tr.write_line(f"criterion {int(num):2d} {label.replace('_', ' '):<28} {status}")
        for line in _NOTES.get(name, []):
            tr.write_line(f"    {line}")
