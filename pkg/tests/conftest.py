import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(label: str, ok: bool, note: str = "") -> bool:
        lines.append(f"{label}: {'PASS' if ok else 'FAIL'}{' - ' + note if note else ''}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: [int(t) if t.isdigit() else t for t in s.split(":")[0].split()]):
            terminalreporter.write_line(line)
