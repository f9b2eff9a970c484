from __future__ import annotations

import pytest

from _util import INT, POINT, PT_CATEGORY, PT_COV, SIERP, context
from geoctx.geometry import make_context


@pytest.fixture(scope="session")
def int_ctx():
    return context(INT)


@pytest.fixture(scope="session")
def sierp_ctx():
    return context(SIERP)


@pytest.fixture(scope="session")
def point_ctx():
    return context(POINT)


@pytest.fixture(scope="session")
def pt_ctx():
    return make_context(PT_CATEGORY, PT_CATEGORY.arrows, cov=PT_COV)


_ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    _ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
