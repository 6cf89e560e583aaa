import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def report(request, capsys):
    """Record and print one ``criterion N: PASS/FAIL`` line."""
    lines = request.config.stash.setdefault(_LINES, [])

    def emit(number, checks):
        ok = all(passed for _, passed in checks)
        failed = [name for name, passed in checks if not passed]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" ({'; '.join(failed)})"
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
