"""Surface the acceptance-criterion verdicts in the terminal summary.

test_acceptance.py records one line per criterion; pytest captures
stdout of passing tests, so the lines are replayed here where they are
always visible.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod is not None else None
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)
