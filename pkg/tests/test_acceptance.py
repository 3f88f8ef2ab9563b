"""Acceptance criteria; the terminal summary prints one PASS/FAIL line per criterion."""
from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
import test_properties
from conftest import coeffs, make_scenario
from scipy.integrate import quad
from scipy.optimize import bisect

from advlimit import catalog, cli
from advlimit.discretize import SpaceTimeGrid
from advlimit.floquet import build_monodromy, principal_eigenvalue
from advlimit.limits import classify_labels, predict_limit_spatial
from advlimit.scenario import Curve, Label
from advlimit.subdomain import (MovingInterval, robin_eigenvalue, shrinking_strip_limit,
                                subdomain_eigenvalue)
from advlimit.temporal import closed_form_no_plateau, limit_eigenvalue_temporal, partition_time

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
SWEEP_ALPHAS = (10, 30, 100, 300)


def solve(sc, alpha, grid):
    return principal_eigenvalue(build_monodromy(sc, grid, alpha, record_trajectory=False)).lam


def assert_sweep_passes(name):
    t0 = time.perf_counter()
    report = cli.verify_scenario(catalog.get(name), alphas=SWEEP_ALPHAS, gap_tol=5e-2)
    elapsed = time.perf_counter() - t0
    print(report.summary())
    assert report.error is None
    assert report.final_gap <= 5e-2
    assert report.trend, report.gaps
    assert elapsed <= 120.0


# ---------------------------------------------------------------- 1. identities

C1 = (1, "exact identities")


@pytest.mark.criterion(*C1)
@pytest.mark.parametrize("alpha", [0, 1, 10, 100, 1000])
def test_c1_constant_potential(alpha):
    sc = make_scenario(V="0.7", m="x**2*(1+0.5*sin(2*pi*t))", dxm="2*x*(1+0.5*sin(2*pi*t))")
    t0 = time.perf_counter()
    lam = solve(sc, alpha, SpaceTimeGrid(101, 100))
    assert time.perf_counter() - t0 < 1.0
    assert abs(lam - 0.7) <= 1e-8


@pytest.mark.criterion(*C1)
@pytest.mark.parametrize("alpha", [0, 10, 100])
def test_c1_shift_identity(alpha):
    base = dict(m="sin(pi*x)+x*sin(2*pi*t)", dxm="pi*cos(pi*x)+sin(2*pi*t)")
    grid = SpaceTimeGrid(101, 100)
    t0 = time.perf_counter()
    a = solve(make_scenario(V="cos(2*pi*x)*cos(2*pi*t)", **base), alpha, grid)
    b = solve(make_scenario(V="cos(2*pi*x)*cos(2*pi*t)+2.5", **base), alpha, grid)
    assert time.perf_counter() - t0 < 1.0
    assert abs(b - a - 2.5) <= 1e-8


@pytest.mark.criterion(*C1)
@pytest.mark.parametrize("V, mean", [
    ("sin(2*pi*t)", 0.0),
    ("1+cos(2*pi*t)**2", 1.5),
    ("exp(sin(2*pi*t))", None),
])
@pytest.mark.parametrize("alpha", [1, 100])
def test_c1_time_only_potential(V, mean, alpha):
    if mean is None:
        mean = quad(lambda t: math.exp(math.sin(2 * math.pi * t)), 0.0, 1.0, epsabs=1e-14)[0]
    sc = make_scenario(V=V, m="x*(1+0.5*cos(2*pi*t))", dxm="1+0.5*cos(2*pi*t)")
    t0 = time.perf_counter()
    lam = solve(sc, alpha, SpaceTimeGrid(101, 200))
    assert time.perf_counter() - t0 < 1.0
    # V(t) factors out of the transport, so lambda is the time average of V
    assert abs(lam - mean) <= 1e-8


# ---------------------------------------------------------------- 2. oracles

C2 = (2, "analytic eigenvalue oracles")
REFINE = (101, 201, 401)
_C2_CLOCK = [0.0]


def richardson(values):
    # first order in dt (implicit Euler), then second order in h
    r1 = [2 * values[1] - values[0], 2 * values[2] - values[1]]
    return (4 * r1[1] - r1[0]) / 3


def refined(fn):
    t0 = time.perf_counter()
    vals = [fn(SpaceTimeGrid(nx, 2 * nx)) for nx in REFINE]
    _C2_CLOCK[0] += time.perf_counter() - t0
    return richardson(vals)


@pytest.mark.criterion(*C2)
@pytest.mark.parametrize("w", [0.5, 1.0])
def test_c2_dirichlet_dirichlet(w):
    iv = MovingInterval.static(0.5 - w / 2, 0.5 + w / 2)
    est = refined(lambda g: subdomain_eigenvalue(coeffs(), iv, "D", "D", g).lam)
    exact = math.pi ** 2 / w ** 2
    assert abs(est - exact) / exact <= 1e-3


@pytest.mark.criterion(*C2)
@pytest.mark.parametrize("w", [0.5, 1.0])
def test_c2_neumann_dirichlet(w):
    iv = MovingInterval.static(0.0, w)
    est = refined(lambda g: subdomain_eigenvalue(coeffs(), iv, "N", "D", g).lam)
    exact = math.pi ** 2 / (4 * w ** 2)
    assert abs(est - exact) / exact <= 1e-3


@pytest.mark.criterion(*C2)
def test_c2_robin_oracle():
    # psi' = eta psi at 0 and psi' = -eta psi at 1: psi = cos(k (x - 1/2)), k tan(k/2) = eta
    k = bisect(lambda k: k * math.tan(k / 2) - 1.0, 1e-9, math.pi - 1e-9, xtol=1e-15)
    iv = MovingInterval.static(0.0, 1.0)
    est = refined(lambda g: robin_eigenvalue(coeffs(), iv, 1.0, "neumann", g).lam)
    assert abs(est - k * k) <= 1e-6


@pytest.mark.criterion(*C2)
def test_c2_total_runtime():
    assert _C2_CLOCK[0] < 30.0


# ---------------------------------------------------------------- 3. nondegenerate

C3 = (3, "nondegenerate convergence")


@pytest.mark.criterion(*C3)
@pytest.mark.parametrize("name", ["monotone-increasing-potential", "monotone-decreasing-potential",
                                  "two-maxima", "moving-maximum"])
def test_c3_sweep(name):
    assert catalog.get(name).expected_limit.kind == "nondegenerate"
    assert_sweep_passes(name)


# ---------------------------------------------------------------- 4. spatial plateaus

C4 = (4, "plateau machinery")


@pytest.mark.criterion(*C4)
def test_c4_classify():
    labels = [Label.parse(ch) for ch in "ACBCABABCB"]
    cs = classify_labels(labels)
    assert cs.E == {0, 4}
    assert (cs.E_NN, cs.E_ND, cs.E_DN, cs.E_DD) == ({9}, {2}, {5}, {7})


@pytest.mark.criterion(*C4)
def test_c4_candidates():
    p = predict_limit_spatial(catalog.get("staircase"), SpaceTimeGrid(101, 200))
    assert sorted(p.sources) == sorted([
        "CurveAverage(0)", "CurveAverage(4)", "Subdomain(9,N,N)", "Subdomain(2,N,D)",
        "Subdomain(5,D,N)", "Subdomain(7,D,D)"])
    assert p.minimum == min(c.value for c in p.candidates)


@pytest.mark.criterion(*C4)
def test_c4_staircase_sweep():
    assert_sweep_passes("staircase")


# ---------------------------------------------------------------- 5. temporal

C5 = (5, "temporal degeneracy")


@pytest.mark.criterion(*C5)
@pytest.mark.parametrize("t_star, V", [
    (0.5, "x"),
    (0.3, "cos(pi*x)+sin(2*pi*t)"),
    (0.7, "x**2*(1+cos(2*pi*t))+0.2*sin(2*pi*t)"),
])
def test_c5_right_then_left_closed_form(t_star, V):
    b = f"piecewise(t % T < {t_star}, 1, -1)"
    sc = make_scenario(V=V, m=f"({b})*x", dxm=b, b=b, partition_hint=[t_star])
    f = sc.coefficients.V
    exact = (quad(lambda t: float(f(1.0, t)), 0.0, t_star, epsabs=1e-13)[0]
             + quad(lambda t: float(f(0.0, t)), t_star, 1.0, epsabs=1e-13)[0])
    res = limit_eigenvalue_temporal(sc, SpaceTimeGrid(41, 400))
    assert abs(res.lam - exact) <= 1e-6


@pytest.mark.criterion(*C5)
@pytest.mark.parametrize("name", ["temporal-left-then-right", "temporal-isolated-zero"])
def test_c5_closed_form_without_plateau(name):
    sc = catalog.get(name)
    grid = SpaceTimeGrid(41, 400)
    p = partition_time(sc.coefficients.b_at, sc.period, grid.nt)
    assert Label.ZERO not in p.labels
    assert abs(limit_eigenvalue_temporal(sc, grid).lam - closed_form_no_plateau(sc, p)) <= 1e-6


@pytest.mark.criterion(*C5)
@pytest.mark.parametrize("name", ["temporal-rest-then-right", "temporal-right-then-left",
                                  "temporal-left-then-right", "temporal-isolated-zero"])
def test_c5_sweep(name):
    assert_sweep_passes(name)


# ---------------------------------------------------------------- 6. shrinking strip

C6 = (6, "shrinking strip")


@pytest.mark.criterion(*C6)
def test_c6_shrinking_strip():
    tab = shrinking_strip_limit(coeffs(V="cos(2*pi*x)"), Curve.constant(0.25),
                                [0.1, 0.05, 0.025], SpaceTimeGrid(101, 100))
    gaps = np.abs(tab.values() - 0.0)
    print("strip gaps", gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 2e-2


# ---------------------------------------------------------------- 7. properties

C7 = (7, "property suites")
PROPERTIES = [getattr(test_properties, n) for n in dir(test_properties) if n.startswith("test_")]


@pytest.mark.criterion(*C7)
@pytest.mark.parametrize("prop", PROPERTIES, ids=lambda f: f.__name__)
def test_c7_property(prop):
    assert prop.hypothesis.inner_test is not None
    assert test_properties.SETTINGS.max_examples >= 20
    t0 = time.perf_counter()
    prop()
    assert time.perf_counter() - t0 < 60.0


def test_c7_covers_every_property():
    names = {f.__name__ for f in PROPERTIES}
    assert len(names) == 7


# ---------------------------------------------------------------- 8. negative control

C8 = (8, "negative control")


@pytest.mark.criterion(*C8)
def test_c8_negative_control(capsys):
    sc = cli.resolve_scenario(str(SCENARIOS / "negative-control.toml"))
    honest = catalog.get("monotone-decreasing-potential")
    truth = cli.predict(honest)[0]
    assert sc.expected_limit.value == pytest.approx(truth + 0.5, abs=1e-12)
    code = cli.main(["verify", str(SCENARIOS / "negative-control.toml")])
    out, _ = capsys.readouterr()
    assert code == cli.EXIT_VERIFY
    assert json.loads(out)[0]["status"] == "FAIL"
