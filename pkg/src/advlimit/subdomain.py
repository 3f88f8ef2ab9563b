"""
Principal eigenvalues on time-dependent intervals ``(lo(t), hi(t))``.

The moving interval is mapped onto ``y in (0, 1)`` with
``x = lo(t) + y w(t)``, ``w = hi - lo``.  Writing ``u(y, t) = psi(x, t)`` the
chain rule turns

    psi_t - D psi_xx - alpha dxm psi_x + V psi = lambda psi

into

    u_t - (D / w^2) u_yy - ((lo' + y w') / w + alpha dxm / w) u_y + V u = lambda u,

so the transformed problem has time-dependent diffusion, an extra drift that
does not scale with ``alpha``, and the same potential sampled along the
moving nodes.  Robin parameters pick up a factor ``w`` (see
:mod:`advlimit.discretize`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretize import BoundaryPair, Robin, SpaceTimeGrid
from .errors import DegenerateWidth, ValidationError
from .floquet import (
    DEFAULT_MAX_ITER, DEFAULT_TOL, monodromy_from_coefficients, principal_eigenvalue,
)
from .scenario import Coefficients, Curve, _Shifted

W_MIN = 1e-4
RATE_STEP = 1e-5
RATE_TOL = 1e-6


@dataclass(frozen=True)
class MovingInterval:
    lower: Curve
    upper: Curve

    @classmethod
    def static(cls, a, b):
        return cls(Curve.constant(a), Curve.constant(b))

    def width(self, t):
        return self.upper(t) - self.lower(t)

    def validate(self, period, samples=257):
        ts = np.linspace(0.0, period, samples)
        for name, cv in (("lower", self.lower), ("upper", self.upper)):
            if not cv.has_rate:
                raise ValidationError(f"{name} curve has no closed-form rate")
            fd = (cv(ts + RATE_STEP) - cv(ts - RATE_STEP)) / (2 * RATE_STEP)
            err = np.abs(fd - cv.rate(ts))
            if np.any(err > RATE_TOL):
                j = int(np.argmax(err))
                raise ValidationError(f"{name} rate is not its derivative at t={ts[j]:.6g}")
        w = self.width(ts)
        if np.any(w < W_MIN):
            j = int(np.argmin(w))
            raise DegenerateWidth(f"interval width {w[j]:.3g} below {W_MIN:g} at t={ts[j]:.6g}")


class _Pullback:
    """``(y, t) -> f(lo(t) + y w(t), t) / w(t)**power``."""

    __slots__ = ("f", "iv", "power")

    def __init__(self, f, iv, power):
        self.f = f
        self.iv = iv
        self.power = power

    def __call__(self, y=0.0, t=0.0):
        lo = self.iv.lower(t)
        w = self.iv.width(t)
        out = self.f(lo + np.asarray(y, dtype=float) * w, t)
        return out / w ** self.power if self.power else out


class _FrameDrift:
    """``(lo' + y w') / w``: the drift seen by a point riding with the interval."""

    __slots__ = ("iv",)

    def __init__(self, iv):
        self.iv = iv

    def __call__(self, y=0.0, t=0.0):
        lo_rate = self.iv.lower.rate(t)
        w_rate = self.iv.upper.rate(t) - lo_rate
        w = self.iv.width(t)
        return (lo_rate + np.asarray(y, dtype=float) * w_rate) / w


class _Diffusion:
    __slots__ = ("d", "iv")

    def __init__(self, d, iv):
        self.d = d
        self.iv = iv

    def __call__(self, t):
        base = self.d(t) if callable(self.d) else self.d
        return base / self.iv.width(t) ** 2


class _Width:
    __slots__ = ("iv",)

    def __init__(self, iv):
        self.iv = iv

    def __call__(self, t):
        return self.iv.width(t)


def transform_to_fixed_domain(interval, coefficients):
    """Coefficients of the equivalent problem on the unit interval."""
    if coefficients.frame_drift is not None or coefficients.scale is not None:
        raise ValidationError("coefficients are already transformed")
    interval.validate(coefficients.period)
    return Coefficients(
        coefficients.period,
        m=_Pullback(coefficients.m, interval, 2),
        dxm=_Pullback(coefficients.dxm, interval, 1),
        V=_Pullback(coefficients.V, interval, 0),
        b=None,
        diffusion=_Diffusion(coefficients.diffusion, interval),
        frame_drift=_FrameDrift(interval),
        scale=_Width(interval),
    )


def _unit_grid(grid, period):
    return SpaceTimeGrid(grid.nx, grid.nt, period)


def _solve(coefficients, interval, boundary, grid, alpha, tol, max_iter, theta):
    coeffs = transform_to_fixed_domain(interval, coefficients)
    g = _unit_grid(grid, coefficients.period)
    M = monodromy_from_coefficients(coeffs, g, alpha, boundary, theta)
    return principal_eigenvalue(M, tol, max_iter)


def subdomain_eigenvalue(coefficients, interval, p, q, grid, alpha=0.0, tol=DEFAULT_TOL,
                         max_iter=DEFAULT_MAX_ITER, theta=1.0):
    """Principal eigenvalue with ``p``/``q`` in ``{"N", "D"}`` at the lower/upper end.

    ``alpha`` defaults to 0: the limit problems carry no advection.  The
    returned eigenfunction lives on the unit ``y`` grid.
    """
    boundary = BoundaryPair.from_letters(p, q)
    return _solve(coefficients, interval, boundary, grid, alpha, tol, max_iter, theta)


def robin_eigenvalue(coefficients, interval, eta, form, grid, alpha=0.0, tol=DEFAULT_TOL,
                     max_iter=DEFAULT_MAX_ITER, theta=1.0):
    """Principal eigenvalue with Robin ends of parameter ``eta``.

    ``form="neumann"``: ``psi_x = eta psi`` at the lower end and
    ``psi_x = -eta psi`` at the upper end.  ``form="dirichlet"``:
    ``psi = eta psi_x`` and ``psi = -eta psi_x``.
    """
    kind = Robin(eta, form)
    return _solve(coefficients, interval, BoundaryPair(kind, kind), grid, alpha, tol,
                  max_iter, theta)


@dataclass
class ParameterTable:
    """Eigenvalue against one parameter (``delta`` or ``eta``)."""

    parameter: str
    rows: list = field(default_factory=list)

    def values(self):
        return np.array([r[1] for r in self.rows])

    def params(self):
        return np.array([r[0] for r in self.rows])

    def to_csv(self):
        lines = [f"{self.parameter},lambda"]
        lines += [f"{format(float(a), '.17g')},{format(float(b), '.17g')}" for a, b in self.rows]
        return "\n".join(lines) + "\n"


def strip(center, delta):
    """The interval ``(center - delta, center + delta)``."""
    rate = center.rate_fn
    return MovingInterval(Curve(_Shifted(center.value, -delta), rate),
                          Curve(_Shifted(center.value, delta), rate))


def shrinking_strip_limit(coefficients, center, deltas, grid, tol=DEFAULT_TOL,
                          max_iter=DEFAULT_MAX_ITER):
    """Neumann eigenvalues on ``(center - delta, center + delta)`` for each delta.

    As the strip shrinks these tend to the average of ``V`` along ``center``.
    Only the Neumann case has a finite limit (Dirichlet eigenvalues blow up
    like ``1/delta^2``).
    """
    table = ParameterTable("delta")
    ts = np.linspace(0.0, coefficients.period, 257)
    for d in deltas:
        d = float(d)
        if 2 * d < W_MIN:
            raise DegenerateWidth(f"delta={d:g} below {W_MIN / 2:g}")
        c = center(ts)
        if np.any(c - d < 0.0) or np.any(c + d > 1.0):
            raise ValidationError(f"strip of half-width {d:g} leaves [0,1]")
        res = subdomain_eigenvalue(coefficients, strip(center, d), "N", "N", grid,
                                   tol=tol, max_iter=max_iter)
        table.rows.append((d, res.lam))
    return table


def robin_table(coefficients, interval, etas, grid, form="neumann", tol=DEFAULT_TOL):
    table = ParameterTable("eta")
    for eta in etas:
        table.rows.append((float(eta), robin_eigenvalue(coefficients, interval, eta, form,
                                                        grid, tol=tol).lam))
    return table

