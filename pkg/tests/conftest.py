import pytest


@pytest.fixture
def report(request):
    """Print an acceptance PASS/FAIL line that survives output capture."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _report(number: int, ok: bool, detail: str) -> None:
        status = "PASS" if ok else "FAIL"
        line = f"ACCEPTANCE {number}: {status} - {detail}"
        if reporter is not None:
            reporter.ensure_newline()
            reporter.write_line(line)
        else:
            print(line)

    return _report
