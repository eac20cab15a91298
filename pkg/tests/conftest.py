from contextlib import contextmanager

import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Context manager that logs one PASS/FAIL line per acceptance criterion."""

    @contextmanager
    def check(number, title):
        note = {"detail": ""}
        try:
            yield note
        except BaseException as exc:
            _emit(number, title, False, note["detail"] or f"{type(exc).__name__}: {exc}".splitlines()[0])
            raise
        _emit(number, title, True, note["detail"])

    return check


def _emit(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    _LINES.append(line)
    print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
