import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import _acceptance  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    results = _acceptance.RESULTS
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        passed, detail = results[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}")
