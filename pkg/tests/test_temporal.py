from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import make_scenario

from advlimit import catalog
from advlimit.discretize import SpaceTimeGrid
from advlimit.errors import AmbiguousSign, ValidationError
from advlimit.expr import Expr
from advlimit.floquet import build_monodromy, principal_eigenvalue
from advlimit.scenario import Label
from advlimit.subdomain import MovingInterval, subdomain_eigenvalue
from advlimit.temporal import (
    ResetStep, TemporalPartition, build_mixed_operator, build_period_operator,
    closed_form_no_plateau, constant_in_x_spread, limit_eigenvalue_temporal,
    mixed_degenerate_eigenvalue, partition_time, trajectory_csv,
)

A, B, C = Label.NEG, Label.ZERO, Label.POS
G = SpaceTimeGrid(41, 80)


def of_t(text):
    e = Expr(text)
    return lambda t: e(0.0, t)


def temporal(b, V, **extra):
    return make_scenario(V=V, m=f"({b})*x", dxm=b, b=b, **extra)


def test_partition_of_sine():
    p = partition_time(of_t("sin(2*pi*t)"), 1.0)
    assert p.labels == (C, A)
    assert p.times == pytest.approx((0.0, 0.5, 1.0), abs=1e-12)


def test_partition_of_zero_drift():
    p = partition_time(of_t("0"), 1.0)
    assert p.labels == (B,) and p.times == (0.0, 1.0)


def test_partition_rest_then_right():
    p = partition_time(of_t("max(0, -sin(2*pi*t))"), 1.0)
    assert p.labels == (B, C)
    assert p.times[1] == pytest.approx(0.5, abs=1e-9)


def test_partition_absorbs_isolated_zero():
    p = partition_time(of_t("1-cos(2*pi*(t-0.3))"), 1.0)
    assert p.labels == (C,)


def test_partition_rotated_sine():
    p = partition_time(of_t("sin(2*pi*(t-0.25))"), 1.0)
    assert p.labels == (A, C, A)
    assert p.times == pytest.approx((0.0, 0.25, 0.75, 1.0), abs=1e-12)


def test_two_sample_zero_is_ambiguous():
    # zero on exactly [0.5, 0.5 + 1/400], sampled twice at nt = 400
    b = of_t("piecewise(t < 0.5, 1, piecewise(t <= 0.5 + 1/400, 0, -1))")
    with pytest.raises(AmbiguousSign):
        partition_time(b, 1.0, nt=400)


def test_hint_sets_boundaries():
    p = partition_time(of_t("sin(2*pi*t)"), 1.0, hint=[0.5])
    assert p.times == (0.0, 0.5, 1.0) and p.labels == (C, A)


def test_hint_rejects_sign_change():
    with pytest.raises(AmbiguousSign):
        partition_time(of_t("sin(2*pi*t)"), 1.0, hint=[0.25])


def test_partition_validation():
    with pytest.raises(ValidationError):
        TemporalPartition((0.0, 0.5, 0.4, 1.0), (A, B, C))
    with pytest.raises(ValidationError):
        TemporalPartition((0.0, 1.0), (A, B))


@pytest.mark.parametrize("kind", ["left", "right"])
def test_resets_fix_constants_and_keep_sign(kind):
    r = ResetStep(kind)
    one = np.ones(7)
    np.testing.assert_array_equal(r.forward(one), one)
    u = np.linspace(0.1, 2.0, 7)
    out = r.forward(u)
    assert np.all(out > 0) and np.ptp(out) == 0.0
    v = np.random.default_rng(0).uniform(size=7)
    assert r.forward(u) @ v == pytest.approx(u @ r.backward(v))


def test_restrict_extend_round_trip():
    r = ResetStep("restrict", 0.0, 2, 4, 7)
    e = ResetStep("extend", 0.5, 2, 4, 7)
    u = np.arange(7.0)
    np.testing.assert_array_equal(e.forward(r.forward(u)), [2, 2, 2, 3, 4, 4, 4])
    v = np.arange(3.0) + 1
    w = np.arange(7.0) + 1
    assert e.forward(v) @ w == pytest.approx(v @ e.backward(w))


def test_unknown_reset_kind():
    with pytest.raises(ValueError):
        ResetStep("sideways")


def test_all_plateau_matches_zero_advection():
    sc = temporal("0", "cos(pi*x)+sin(2*pi*t)")
    lim = limit_eigenvalue_temporal(sc, G).lam
    full = principal_eigenvalue(build_monodromy(sc, G, 0.0)).lam
    assert lim == pytest.approx(full, abs=1e-9)


def test_right_then_left_spectral_radius():
    sc = catalog.get("temporal-right-then-left")
    res = limit_eigenvalue_temporal(sc, G)
    assert res.lam == pytest.approx(0.5, abs=1e-6)
    assert res.spectral_radius == pytest.approx(math.exp(-0.5), rel=1e-6)


def test_constant_potential():
    sc = temporal("sin(2*pi*t)", "1.3")
    assert limit_eigenvalue_temporal(sc, G).lam == pytest.approx(1.3, abs=1e-10)


@pytest.mark.parametrize("name", ["temporal-left-then-right", "temporal-isolated-zero",
                                  "temporal-right-then-left"])
def test_closed_form_without_plateau(name):
    sc = catalog.get(name)
    p = partition_time(sc.coefficients.b_at, 1.0)
    res = limit_eigenvalue_temporal(sc, G, partition=p)
    assert res.lam == pytest.approx(closed_form_no_plateau(sc, p), abs=1e-6)


def test_closed_form_rejects_plateau():
    sc = catalog.get("temporal-rest-then-right")
    p = partition_time(sc.coefficients.b_at, 1.0)
    with pytest.raises(ValidationError):
        closed_form_no_plateau(sc, p)


def test_eigenfunction_constant_on_collapse_segments():
    res = limit_eigenvalue_temporal(catalog.get("temporal-rest-then-right"), G)
    assert constant_in_x_spread(res) <= 1e-10
    labels = [lab for lab in res.column_labels if lab is not None]
    assert B in labels and C in labels


def test_operator_rejects_wrong_period():
    sc = temporal("sin(2*pi*t)", "x")
    with pytest.raises(ValidationError):
        build_period_operator(sc, TemporalPartition((0.0, 2.0), (C,)), G)


def test_mixed_constant_potential():
    sc = make_scenario(V="0.8")
    res = mixed_degenerate_eigenvalue(sc, 0.3, 0.7, 0.5, G)
    assert res.lam == pytest.approx(0.8, abs=1e-10)


def test_mixed_short_strip_time_approaches_projected_full_problem():
    # as t_star -> 0 the map tends to F o (extend o restrict), F the drift-free period map
    sc = make_scenario(V="cos(2*pi*x)+0.5*sin(2*pi*t)")
    grid = SpaceTimeGrid(41, 400)
    F = build_monodromy(sc, grid, 0.0, record_trajectory=False)
    full = np.column_stack([F.apply(e) for e in np.eye(41)])
    P = np.column_stack([ResetStep("extend", 0.0, 12, 28, 41).forward(
        ResetStep("restrict", 0.0, 12, 28, 41).forward(e)) for e in np.eye(41)])
    target = -math.log(max(abs(np.linalg.eigvals(full @ P))))
    gaps = [abs(mixed_degenerate_eigenvalue(sc, 0.3, 0.7, ts, grid).lam - target)
            for ts in (0.2, 0.05, 0.01)]
    # first order in t_star
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.3 * gaps[1] and gaps[2] < 2e-2


def test_mixed_long_strip_time_approaches_strip_problem():
    sc = make_scenario(V="cos(2*pi*x)")
    grid = SpaceTimeGrid(81, 200)
    strip = subdomain_eigenvalue(sc.coefficients, MovingInterval.static(0.25, 0.75), "N", "N",
                                 SpaceTimeGrid(41, 200)).lam
    lam = mixed_degenerate_eigenvalue(sc, 0.25, 0.75, 0.995, grid).lam
    assert lam == pytest.approx(strip, abs=2e-2)


def test_mixed_single_node_strip_maps_full_grid():
    sc = make_scenario(V="x+sin(2*pi*t)")
    grid = SpaceTimeGrid(41, 200)
    M = build_mixed_operator(sc, 0.4, 0.4, 0.5, grid)
    assert M.n_in == 41
    lam = mixed_degenerate_eigenvalue(sc, 0.4, 0.4, 0.5, grid).lam
    assert np.isfinite(lam)


@pytest.mark.parametrize("k1, k2, ts", [(0.0, 0.5, 0.5), (0.6, 0.4, 0.5), (0.3, 0.7, 1.0)])
def test_mixed_validation(k1, k2, ts):
    with pytest.raises(ValidationError):
        build_mixed_operator(make_scenario(), k1, k2, ts, G)


def test_trajectory_csv():
    res = limit_eigenvalue_temporal(catalog.get("temporal-right-then-left"), G)
    text = trajectory_csv(res)
    lines = text.splitlines()
    assert lines[0] == "t,x,value"
    assert len(lines) == 1 + res.eigenfunction.size
    t, x, v = map(float, lines[1].split(","))
    assert t == 0.0 and x == 0.0 and v > 0
