from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from advlimit.discretize import BoundaryPair, SpaceTimeGrid
from advlimit.errors import DegenerateWidth, ValidationError
from advlimit.expr import Expr
from advlimit.floquet import monodromy_from_coefficients, principal_eigenvalue
from advlimit.scenario import Curve
from advlimit.subdomain import (MovingInterval, robin_eigenvalue, robin_table,
                                shrinking_strip_limit, strip, subdomain_eigenvalue,
                                transform_to_fixed_domain)

from conftest import coeffs

G = SpaceTimeGrid(81, 80)


def curve(expr, rate):
    return Curve(Expr(expr), Expr(rate))


def translating(a0, amp, width):
    lo = curve(f"{a0}+{amp}*sin(2*pi*t)", f"{2 * math.pi * amp}*cos(2*pi*t)")
    hi = curve(f"{a0 + width}+{amp}*sin(2*pi*t)", f"{2 * math.pi * amp}*cos(2*pi*t)")
    return MovingInterval(lo, hi)


def test_identity_transform():
    c = coeffs(m="x**2", dxm="2*x", V="cos(x)+t")
    tc = transform_to_fixed_domain(MovingInterval.static(0, 1), c)
    y = np.linspace(0, 1, 9)
    for t in (0.0, 0.3):
        np.testing.assert_allclose(tc.V(y, t), c.V(y, t))
        np.testing.assert_allclose(tc.dxm(y, t), c.dxm(y, t))
        np.testing.assert_allclose(tc.frame_drift(y, t), 0.0)
        assert tc.diffusion_at(t) == 1.0


def test_static_interval_scales_diffusion():
    tc = transform_to_fixed_domain(MovingInterval.static(0.2, 0.7), coeffs())
    assert tc.diffusion_at(0.4) == pytest.approx(4.0)
    np.testing.assert_allclose(tc.frame_drift(np.linspace(0, 1, 5), 0.4), 0.0)


def test_rigid_translation_drift():
    iv = translating(0.2, 0.1, 0.5)
    tc = transform_to_fixed_domain(iv, coeffs())
    y = np.linspace(0, 1, 5)
    for t in (0.0, 0.1, 0.6):
        expected = 0.2 * math.pi * math.cos(2 * math.pi * t) / 0.5
        np.testing.assert_allclose(tc.frame_drift(y, t), expected, rtol=1e-12)


def test_chain_rule_residuals_agree():
    # psi_t - D psi_xx - alpha dxm psi_x + V psi at x = lo + y w equals the
    # transformed residual of u(y, t) = psi(lo + y w, t)
    alpha = 3.0
    c = coeffs(m="sin(2*x)*cos(2*pi*t)", dxm="2*cos(2*x)*cos(2*pi*t)", V="x*sin(2*pi*t)")
    lo = curve("0.2+0.1*sin(2*pi*t)", "0.2*pi*cos(2*pi*t)")
    hi = curve("0.8+0.05*cos(2*pi*t)", "-0.1*pi*sin(2*pi*t)")
    iv = MovingInterval(lo, hi)
    tc = transform_to_fixed_domain(iv, c)
    psi = Expr("exp(sin(3*x) + 0.5*cos(2*pi*t))")

    def u(y, t):
        return psi(lo(t) + y * iv.width(t), t)

    h = 1e-4
    for y in (0.1, 0.45, 0.9):
        for t in (0.05, 0.4, 0.77):
            x = lo(t) + y * iv.width(t)
            psi_t = (psi(x, t + h) - psi(x, t - h)) / (2 * h)
            psi_x = (psi(x + h, t) - psi(x - h, t)) / (2 * h)
            psi_xx = (psi(x + h, t) - 2 * psi(x, t) + psi(x - h, t)) / h ** 2
            r = psi_t - psi_xx - alpha * c.dxm(x, t) * psi_x + c.V(x, t) * psi(x, t)
            u_t = (u(y, t + h) - u(y, t - h)) / (2 * h)
            u_y = (u(y + h, t) - u(y - h, t)) / (2 * h)
            u_yy = (u(y + h, t) - 2 * u(y, t) + u(y - h, t)) / h ** 2
            drift = alpha * tc.dxm(y, t) + tc.frame_drift(y, t)
            rt = u_t - tc.diffusion_at(t) * u_yy - drift * u_y + tc.V(y, t) * u(y, t)
            assert float(rt) == pytest.approx(float(r), abs=1e-5)


def test_neumann_zero_potential():
    lam = subdomain_eigenvalue(coeffs(), translating(0.2, 0.1, 0.4), "N", "N", G).lam
    assert abs(lam) < 1e-10


def test_static_curve_equivalence():
    c = coeffs(V="cos(3*x)+x*sin(2*pi*t)")
    a, b = 0.25, 0.75
    lam_t = subdomain_eigenvalue(c, MovingInterval.static(a, b), "D", "N", G).lam
    direct = SpaceTimeGrid(G.nx, G.nt, 1.0, a, b)
    M = monodromy_from_coefficients(c, direct, 0.0,
                                    BoundaryPair.from_letters("D", "N"), record_trajectory=False)
    assert principal_eigenvalue(M).lam == pytest.approx(lam_t, abs=1e-8)


@pytest.mark.parametrize("amp", [0.05, 0.1, 0.2])
def test_oscillating_box_not_below_static(amp):
    # the moving box carries an extra (kappa')^2/4 on average; compare on one grid
    static = subdomain_eigenvalue(coeffs(), MovingInterval.static(0.25, 0.75), "D", "D", G).lam
    moving = subdomain_eigenvalue(coeffs(), translating(0.25, amp, 0.5), "D", "D", G).lam
    assert moving >= static - 1e-6


def test_robin_zero_is_neumann():
    c = coeffs(V="sin(2*pi*x)+cos(2*pi*t)")
    iv = translating(0.2, 0.1, 0.5)
    nn = subdomain_eigenvalue(c, iv, "N", "N", G).lam
    assert robin_eigenvalue(c, iv, 0.0, "neumann", G).lam == pytest.approx(nn, abs=1e-10)


def test_robin_shift_identity():
    iv = MovingInterval.static(0.1, 0.6)
    a = robin_eigenvalue(coeffs(), iv, 1.3, "neumann", G).lam
    b = robin_eigenvalue(coeffs(V="0.4"), iv, 1.3, "neumann", G).lam
    assert b - a == pytest.approx(0.4, abs=1e-12)


def test_robin_forms_agree():
    iv = MovingInterval.static(0.0, 1.0)
    c = coeffs(V="x")
    a = robin_eigenvalue(c, iv, 0.5, "dirichlet", G).lam
    b = robin_eigenvalue(c, iv, 2.0, "neumann", G).lam
    assert a == pytest.approx(b, abs=1e-12)


def test_dirichlet_form_zero_is_dirichlet():
    iv = MovingInterval.static(0.0, 1.0)
    a = robin_eigenvalue(coeffs(), iv, 0.0, "dirichlet", G).lam
    b = subdomain_eigenvalue(coeffs(), iv, "D", "D", G).lam
    assert a == pytest.approx(b, abs=1e-12)


def test_robin_neumann_form_oracle_coarse():
    k = brentq(lambda k: k * math.tan(k / 2) - 1.0, 1e-9, math.pi - 1e-9)
    lam = robin_eigenvalue(coeffs(), MovingInterval.static(0, 1), 1.0, "neumann",
                           SpaceTimeGrid(201, 400)).lam
    assert lam == pytest.approx(k * k, rel=5e-3)


def test_robin_limit_continuity():
    c = coeffs(V="cos(2*pi*x)")
    iv = MovingInterval.static(0.2, 0.8)
    nn = subdomain_eigenvalue(c, iv, "N", "N", G).lam
    ratios = [abs(robin_eigenvalue(c, iv, e, "neumann", G).lam - nn) / abs(e)
              for e in (0.1, -0.1, 0.01, -0.01, 0.001, -0.001)]
    assert max(ratios) <= 1.5 * min(ratios)


def test_robin_table_csv():
    tab = robin_table(coeffs(), MovingInterval.static(0, 1), [-1, 0, 1], G)
    assert tab.to_csv().splitlines()[0] == "eta,lambda"
    assert np.all(np.diff(tab.values()) > 0)


def test_shrinking_strip_constant_and_time_only():
    center = Curve.constant(0.5)
    for V, ref in (("0.3", 0.3), ("sin(2*pi*t)+0.2", 0.2)):
        tab = shrinking_strip_limit(coeffs(V=V), center, [0.2, 0.1], G)
        np.testing.assert_allclose(tab.values(), ref, atol=1e-10)
    assert tab.to_csv().splitlines()[0] == "delta,lambda"


def test_strip_bounds_checked():
    with pytest.raises(ValidationError):
        shrinking_strip_limit(coeffs(), Curve.constant(0.05), [0.1], G)
    with pytest.raises(DegenerateWidth):
        shrinking_strip_limit(coeffs(), Curve.constant(0.5), [1e-5], G)


def test_strip_moves_with_center():
    center = curve("0.5+0.1*sin(2*pi*t)", "0.2*pi*cos(2*pi*t)")
    s = strip(center, 0.1)
    assert s.lower(0.25) == pytest.approx(0.5)
    assert s.upper.rate(0.0) == pytest.approx(0.2 * math.pi)


def test_interval_validation():
    with pytest.raises(DegenerateWidth):
        MovingInterval.static(0.5, 0.50001).validate(1.0)
    with pytest.raises(ValidationError):
        MovingInterval(Curve(Expr("0.1")), Curve.constant(0.5)).validate(1.0)
    bad = MovingInterval(curve("0.1+0.05*sin(2*pi*t)", "0"), Curve.constant(0.5))
    with pytest.raises(ValidationError, match="rate"):
        bad.validate(1.0)


def test_dirichlet_ends_pin_eigenfunction():
    res = subdomain_eigenvalue(coeffs(), MovingInterval.static(0.2, 0.7), "D", "D", G)
    assert np.all(res.eigenfunction[0] == 0) and np.all(res.eigenfunction[-1] == 0)
    assert res.eigenfunction[1:-1].min() > 0
