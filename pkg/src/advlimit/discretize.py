"""
Spatial grids and tridiagonal operators for

    L u = -D u_xx - beta u_x + V u,      beta = alpha * dxm + frame_drift,

on a uniform grid with Neumann, Dirichlet or Robin ends.

The first-order term uses exponential fitting (the non-divergence form of
the Scharfetter-Gummel flux): with mesh Peclet number ``Pe = beta h / D`` the
neighbour couplings are ``-(D/h^2) B(-Pe)`` to the right and ``-(D/h^2) B(Pe)``
to the left, where ``B(z) = z / (exp(z) - 1)``.  Both are negative for every
``Pe``, so ``I + dt L`` is an M-matrix at any advection strength, and the
stencil is nodally exact for constant-coefficient steady problems.

Boundary rows use a ghost node eliminated with a centred difference of the
boundary condition, which keeps the matrix tridiagonal.  A Neumann end is the
Robin end with ``eta = 0`` and shares its code path exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs

from .errors import SingularSystem

NEUMANN = "neumann"
DIRICHLET = "dirichlet"
ROBIN = "robin"


@dataclass(frozen=True)
class BoundaryKind:
    """One end condition.

    ``Robin`` carries ``eta`` and the ``form`` it was requested in:

    * ``form="neumann"``: ``u_x = eta u`` at the left end, ``u_x = -eta u`` at the right;
    * ``form="dirichlet"``: ``u = eta u_x`` at the left end, ``u = -eta u_x`` at the right.

    ``eta`` is in physical length units; :func:`assemble` converts it when the
    grid is a rescaled copy of a moving interval.
    """

    kind: str = NEUMANN
    eta: float = 0.0
    form: str = NEUMANN

    def __post_init__(self):
        if self.kind not in (NEUMANN, DIRICHLET, ROBIN):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.form not in (NEUMANN, DIRICHLET):
            raise ValueError(f"unknown Robin form {self.form!r}")
        if not np.isfinite(self.eta):
            raise ValueError("Robin eta must be finite")

    def label(self):
        if self.kind == ROBIN:
            return f"robin({self.form},{self.eta:g})"
        return self.kind


def Neumann():
    return BoundaryKind(NEUMANN)


def Dirichlet():
    return BoundaryKind(DIRICHLET)


def Robin(eta, form=NEUMANN):
    return BoundaryKind(ROBIN, float(eta), form)


@dataclass(frozen=True)
class BoundaryPair:
    left: BoundaryKind = field(default_factory=Neumann)
    right: BoundaryKind = field(default_factory=Neumann)

    @classmethod
    def from_letters(cls, p, q):
        """Build from the ``N``/``D`` letters used for subdomain problems."""
        pick = {"N": Neumann, "D": Dirichlet}
        return cls(pick[p.upper()](), pick[q.upper()]())


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform nodes on ``[x0, x1]`` and a uniform partition of one period."""

    nx: int
    nt: int
    period: float = 1.0
    x0: float = 0.0
    x1: float = 1.0

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError("nx must be at least 3")
        if self.nt < 2:
            raise ValueError("nt must be at least 2")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not self.x1 > self.x0:
            raise ValueError("empty spatial domain")

    @property
    def dx(self):
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def dt(self):
        return self.period / self.nt

    @property
    def x_nodes(self):
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def t_nodes(self):
        t = self.period * (np.arange(self.nt + 1) / self.nt)
        t[-1] = self.period
        return t

    def with_period(self, period):
        return SpaceTimeGrid(self.nx, self.nt, period, self.x0, self.x1)


def bernoulli(z):
    """``B(z) = z / (exp(z) - 1)`` with ``B(0) = 1``, stable for large ``|z|``."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    small = np.abs(z) < 1e-8
    with np.errstate(over="ignore"):
        big = ~small
        out[big] = z[big] / np.expm1(z[big])
    out[small] = 1.0 - 0.5 * z[small]
    return out


@dataclass(frozen=True)
class SpatialOperator:
    """Tridiagonal ``L_h`` at one time level.

    ``sub[i]`` couples row ``i`` to node ``i-1`` and ``sup[i]`` to node ``i+1``
    (``sub[0]`` and ``sup[-1]`` are zero).  ``diag`` includes the nodal
    potential, which is also kept in ``potential`` so callers can treat it
    apart from transport.  Transport rows sum to zero except at Robin ends.
    Pinned (Dirichlet) ends are flagged and become identity rows in every
    solve.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    potential: np.ndarray
    pin_left: bool = False
    pin_right: bool = False

    @property
    def n(self):
        return self.diag.size

    @property
    def free(self):
        mask = np.ones(self.n, dtype=bool)
        mask[0] = not self.pin_left
        mask[-1] = not self.pin_right
        return mask

    def matvec(self, u):
        out = self.diag * u
        out[1:] += self.sub[1:] * u[:-1]
        out[:-1] += self.sup[:-1] * u[1:]
        if self.pin_left:
            out[0] = 0.0
        if self.pin_right:
            out[-1] = 0.0
        return out

    def transpose_matvec(self, u):
        u = np.array(u, dtype=float)
        if self.pin_left:
            u[0] = 0.0
        if self.pin_right:
            u[-1] = 0.0
        out = self.diag * u
        out[:-1] += self.sub[1:] * u[1:]
        out[1:] += self.sup[:-1] * u[:-1]
        return out

    def row_sums(self):
        return self.sub + self.diag + self.sup

    def transport(self):
        """The same operator with the potential removed from the diagonal."""
        return SpatialOperator(
            self.sub, self.diag - self.potential, self.sup,
            np.zeros_like(self.potential), self.pin_left, self.pin_right,
        )

    def dense(self):
        a = np.diag(self.diag) + np.diag(self.sub[1:], -1) + np.diag(self.sup[:-1], 1)
        if self.pin_left:
            a[0, :] = 0.0
        if self.pin_right:
            a[-1, :] = 0.0
        return a


def _robin_eta_on_grid(kind, scale):
    """Neumann-form ``eta`` in grid units, or ``None`` for a pinned end."""
    if kind.kind == NEUMANN:
        return 0.0
    if kind.kind == DIRICHLET:
        return None
    if kind.form == NEUMANN:
        return kind.eta * scale
    if kind.eta == 0.0:
        return None
    return scale / kind.eta


def assemble_at(coefficients, x, t, alpha, boundary):
    """Assemble ``L_h`` on nodes ``x`` with coefficients frozen at time ``t``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = x[1] - x[0]
    diff = coefficients.diffusion_at(t)
    beta = alpha * coefficients.dxm(x, t) if alpha != 0.0 else np.zeros(n)
    if coefficients.frame_drift is not None:
        beta = beta + coefficients.frame_drift(x, t)
    pot = np.array(coefficients.V(x, t), dtype=float)
    pe = beta * h / diff
    scale = diff / (h * h)
    cp = scale * bernoulli(-pe)
    cm = scale * bernoulli(pe)

    sub = -cm.copy()
    sup = -cp.copy()
    diag = cp + cm + pot
    sub[0] = 0.0
    sup[-1] = 0.0

    length = coefficients.scale_at(t)
    eta_l = _robin_eta_on_grid(boundary.left, length)
    eta_r = _robin_eta_on_grid(boundary.right, length)
    # ghost node u_{-1} = u_1 - 2 h eta u_0 (left), u_n = u_{n-2} - 2 h eta u_{n-1} (right)
    # the Robin terms are O(1/h), so they stay with transport in the implicit solve
    if eta_l is not None:
        sup[0] = -(cp[0] + cm[0])
        diag[0] += 2.0 * h * eta_l * cm[0]
    if eta_r is not None:
        sub[-1] = -(cp[-1] + cm[-1])
        diag[-1] += 2.0 * h * eta_r * cp[-1]
    return SpatialOperator(sub, diag, sup, pot, eta_l is None, eta_r is None)


def assemble(coefficients, grid, t_index, alpha, boundary):
    """Assemble ``L_h`` at ``grid.t_nodes[t_index]``."""
    t = grid.t_nodes[t_index]
    return assemble_at(coefficients, grid.x_nodes, t, float(alpha), boundary)


class TridiagonalFactor:
    """LU factorization (LAPACK ``gttrf``) of ``I + c L`` with pinned rows as identity."""

    __slots__ = ("_lu", "n")

    def __init__(self, op, c):
        n = op.n
        dl = c * op.sub[1:]
        d = 1.0 + c * op.diag
        du = c * op.sup[:-1]
        if op.pin_left:
            d[0] = 1.0
            du[0] = 0.0
        if op.pin_right:
            d[-1] = 1.0
            dl[-1] = 0.0
        dl, d, du, du2, ipiv, info = dgttrf(dl, d, du)
        if info > 0:
            raise SingularSystem(f"zero pivot at row {info - 1} of the tridiagonal system")
        if info < 0:
            raise ValueError(f"gttrf: illegal argument {-info}")
        self._lu = (dl, d, du, du2, ipiv)
        self.n = n

    def solve(self, rhs, transpose=False):
        x, info = dgttrs(*self._lu, rhs, trans="T" if transpose else "N")
        if info != 0:
            raise ValueError(f"gttrs: illegal argument {-info}")
        return x


def explicit_rhs(u, op, c):
    """``(I - c L) u`` with pinned entries set to zero."""
    out = u - c * op.matvec(u) if c != 0.0 else np.array(u, dtype=float)
    if op.pin_left:
        out[0] = 0.0
    if op.pin_right:
        out[-1] = 0.0
    return out


def step(u, operator, dt, theta=1.0, prev=None):
    """One theta-scheme step ``(I + theta dt L) u' = (I - (1-theta) dt L_prev) u``.

    ``prev`` defaults to ``operator``.  Raises :class:`SingularSystem` on a
    zero pivot, which cannot happen while ``I + theta dt L`` is an M-matrix.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    u = np.asarray(u, dtype=float)
    prev = operator if prev is None else prev
    rhs = explicit_rhs(u, prev, (1.0 - theta) * dt)
    if operator.pin_left:
        rhs[0] = 0.0
    if operator.pin_right:
        rhs[-1] = 0.0
    return TridiagonalFactor(operator, theta * dt).solve(rhs)
