from functools import lru_cache

import pytest

from curvelab.conformal import fit_map
from curvelab.curve import make_named_curve


@lru_cache(maxsize=None)
def named(family, n=1024, **kw):
    return make_named_curve(family, n, **kw)


@lru_cache(maxsize=None)
def maps(family, n=1024, engine="auto", **kw):
    c = named(family, n, **kw)
    return fit_map(c, "interior", engine), fit_map(c, "exterior_reflected", engine)


@pytest.fixture
def circle():
    return named("circle", r=1.0)


@pytest.fixture
def square():
    return named("square", side=1.0)


@pytest.fixture
def poly03():
    return named("polynomial", c=0.3)


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
