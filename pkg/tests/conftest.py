import pytest
from hypothesis import HealthCheck, settings

from penaltysim.adversary import default_dealer
from penaltysim.protocols import build

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def ours4():
    g = build("Ours", 4, 1)
    return g, default_dealer(g)


AC_LINES: list[str] = []


@pytest.fixture
def ac_report(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    tr = request.config.pluginmanager.getplugin("terminalreporter")

    def emit(ac: int, ok: bool, detail: str) -> None:
        line = f"AC{ac:<2} {'PASS' if ok else 'FAIL'}  {detail}"
        AC_LINES.append(line)
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if AC_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(AC_LINES, key=lambda s: int(s[2:4])):
            terminalreporter.write_line(line)
