from __future__ import annotations

import pytest

from advlimit.expr import Expr
from advlimit.scenario import Coefficients, scenario_from_dict

_CRITERIA: dict = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    number, title = mark.args
    ok = call.excinfo is None
    prev = _CRITERIA.get(number, (title, True, 0))
    _CRITERIA[number] = (title, prev[1] and ok, prev[2] + 1)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, n = _CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title} ({n} tests)")


def coeffs(m="0", dxm="0", V="0", b=None, T=1.0):
    params = {"T": T}
    return Coefficients(T, Expr(m, params), Expr(dxm, params), Expr(V, params),
                        None if b is None else Expr(b, params))


def make_scenario(V="0", m="x", dxm="1", T=1.0, probe=33, **extra):
    d = {"name": extra.pop("name", "test"), "T": T,
         "expressions": {"m": m, "dxm": dxm, "V": V}}
    if "b" in extra:
        d["expressions"]["b"] = extra.pop("b")
    d.update(extra)
    return scenario_from_dict(d, probe=probe)


@pytest.fixture
def flat():
    """Drift-free, potential-free coefficients on one unit period."""
    return coeffs()
