import functools

import pytest

from levelset_lab.harness import execute, preset_config

CRITERIA: dict[int, list[tuple[bool, str]]] = {}


@functools.lru_cache(maxsize=None)
def _execute(name, overrides=()):
    return execute(preset_config(name, list(overrides)))


@pytest.fixture(scope="session")
def preset_run():
    """execute() of a preset, cached for the whole session: (files, constants, checks)."""
    return _execute


@pytest.fixture
def verdict():
    """Record one measured case of an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        CRITERIA.setdefault(number, []).append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        cases = CRITERIA[number]
        failed = [d for ok, d in cases if not ok]
        status = "PASS" if not failed else "FAIL"
        note = f"{len(cases)} case(s)" if not failed else "; ".join(failed)
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {note}")
