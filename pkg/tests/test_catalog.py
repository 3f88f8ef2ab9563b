from __future__ import annotations

import numpy as np
import pytest

from advlimit import catalog
from advlimit.limits import classify_labels

REQUIRED = [
    "constant-potential", "time-only-potential", "monotone-increasing-potential",
    "monotone-decreasing-potential", "two-maxima", "plateau-nn", "plateau-dd", "plateau-nd",
    "staircase", "temporal-rest-then-right", "temporal-right-then-left", "mixed-strip",
]


def test_catalog_size_and_names():
    names = catalog.catalog_names()
    assert len(names) >= 14
    assert len(set(names)) == len(names)
    assert set(REQUIRED) <= set(names)


@pytest.mark.parametrize("name", catalog.catalog_names())
def test_every_scenario_states_its_limit(name):
    sc = catalog.get(name)
    assert sc.expected_limit is not None
    assert sc.description


@pytest.mark.parametrize("name", catalog.catalog_names())
def test_temporal_drifts_do_not_depend_on_x(name):
    c = catalog.get(name).coefficients
    if c.b is None:
        return
    t = np.linspace(0.0, 1.0, 17)
    for x in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(c.dxm(x, t), c.b_at(t), atol=1e-12)


@pytest.mark.parametrize("name", catalog.catalog_names())
def test_labels_are_well_formed(name):
    ann = catalog.get(name).annotation
    if ann is not None and ann.labels is not None:
        classify_labels(list(ann.labels))


def test_unknown_name():
    with pytest.raises(KeyError):
        catalog.get("no-such-scenario")


def test_catalog_is_cached():
    a, b = catalog.builtin_catalog(), catalog.builtin_catalog()
    assert all(x is y for x, y in zip(a, b))


def test_profile_pieces_vanish_at_breaks():
    m, dxm = catalog.profile(["A", "C", "B"], [0.0, 0.3, 0.6, 1.0], 5.0)
    from advlimit.expr import Expr
    f = Expr(dxm)
    for x in (0.3, 0.6):
        assert abs(float(f(x, 0.0))) < 1e-12
    assert float(f(0.15, 0.0)) < 0 < float(f(0.45, 0.0))
    assert np.all(Expr(dxm)(np.linspace(0.6, 1.0, 9), 0.0) == 0.0)
    g = Expr(m)
    assert float(g(0.0, 0.0)) == 0.0
