"""
Period maps and principal eigenvalues of time-periodic problems.

The period map advances ``u_t + L(t) u = 0`` over one period.  With
``r`` its spectral radius the principal eigenvalue is ``lambda = -ln(r)/T``.

Each time step splits the potential ``V`` from the transport part ``A``
(diffusion, drift and boundary rows) and treats it by exact exponentials::

    u <- exp(-(1-theta) dt V_{k-1}) u
    u <- (I + theta dt A_k)^{-1} (I - (1-theta) dt A_{k-1}) u
    u <- exp(-theta dt V_k) u

The smallest potential value of each step is pulled out as a scalar and
accumulated in log form.  This keeps every factor in ``[0, 1]``, makes
``V -> V + c`` shift ``lambda`` by exactly ``c`` and keeps the map monotone in
``V`` for ``theta = 1``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretize import (
    BoundaryPair, SpaceTimeGrid, TridiagonalFactor, assemble_at,
)
from .errors import NoConvergence

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


class SolveStep:
    """One theta-scheme step of the split scheme described in the module docstring."""

    __slots__ = ("t_end", "dt", "theta", "factor", "prev", "pre", "post",
                 "log_scale", "pins", "n", "embed")

    def __init__(self, op, prev, dt, theta, t_end, factor=None, embed=None):
        self.embed = embed
        self.t_end = float(t_end)
        self.dt = float(dt)
        self.theta = float(theta)
        self.n = op.n
        free = op.free
        self.pins = (op.pin_left, op.pin_right)
        v_now = float(op.potential[free].min())
        v_prev = float(prev.potential[free].min())
        self.log_scale = dt * (theta * v_now + (1.0 - theta) * v_prev)
        self.post = np.where(free, np.exp(-theta * dt * (op.potential - v_now)), 0.0)
        if theta < 1.0:
            self.pre = np.where(free, np.exp(-(1.0 - theta) * dt * (prev.potential - v_prev)), 0.0)
            self.prev = prev.transport()
        else:
            self.pre = None
            self.prev = None
        self.factor = factor if factor is not None else TridiagonalFactor(op.transport(), theta * dt)

    def _zero_pins(self, u):
        if self.pins[0]:
            u[0] = 0.0
        if self.pins[1]:
            u[-1] = 0.0
        return u

    def forward(self, u):
        if self.pre is not None:
            u = self.pre * u
            c = (1.0 - self.theta) * self.dt
            u = u - c * self.prev.matvec(u)
        else:
            u = np.array(u, dtype=float)
        u = self.factor.solve(self._zero_pins(u))
        u *= self.post
        return u

    def backward(self, v):
        v = self.post * v
        v = self._zero_pins(self.factor.solve(v, transpose=True))
        if self.pre is not None:
            c = (1.0 - self.theta) * self.dt
            v = v - c * self.prev.transpose_matvec(v)
            v = self.pre * v
        return v


class DecayStep:
    """Multiplication by ``exp(-integral of a scalar potential)``, kept as a log scale."""

    __slots__ = ("t_end", "dt", "log_scale", "n", "embed")

    def __init__(self, integral, dt, t_end, n, embed=None):
        self.embed = embed
        self.log_scale = float(integral)
        self.dt = float(dt)
        self.t_end = float(t_end)
        self.n = n

    def forward(self, u):
        return np.array(u, dtype=float)

    backward = forward


@dataclass
class MonodromyOperator:
    """The period map as an ordered list of steps.

    Every step exposes ``forward``/``backward`` on vectors, the time advanced
    ``dt``, its end time ``t_end`` and a scalar ``log_scale`` that has been
    factored out (the true step is ``exp(-log_scale) * forward``).  Steps may
    change the vector length (restriction to a strip and extension back);
    such steps provide ``embed`` to show a short vector on the full grid.
    """

    steps: list
    grid: SpaceTimeGrid
    record_trajectory: bool = True
    n_in: Optional[int] = None
    tags: Optional[list] = None

    def __post_init__(self):
        if self.n_in is None:
            self.n_in = self.grid.nx

    @property
    def period(self):
        return self.grid.period

    @property
    def total_time(self):
        return math.fsum(s.dt for s in self.steps)

    @property
    def log_scale(self):
        return math.fsum(s.log_scale for s in self.steps)

    def apply_scaled(self, u):
        """Return ``(v, g)`` with ``M u = exp(g) v`` and ``max |v| = 1`` (unless ``M u = 0``)."""
        u = np.asarray(u, dtype=float)
        gain = 0.0
        for k, s in enumerate(self.steps):
            u = s.forward(u)
            gain -= s.log_scale
            if k % 16 == 15:
                u, gain = _renorm(u, gain)
        return _renorm(u, gain)

    def apply(self, u):
        v, g = self.apply_scaled(u)
        return v * math.exp(g)

    def adjoint_scaled(self, v):
        v = np.asarray(v, dtype=float)
        gain = 0.0
        for k, s in enumerate(reversed(self.steps)):
            v = s.backward(v)
            gain -= s.log_scale
            if k % 16 == 15:
                v, gain = _renorm(v, gain)
        return _renorm(v, gain)

    def adjoint(self, v):
        w, g = self.adjoint_scaled(v)
        return w * math.exp(g)

    def rotated(self, k):
        """The period map started ``k`` steps later (a conjugate operator)."""
        k %= len(self.steps)
        tags = None if self.tags is None else self.tags[k:] + self.tags[:k]
        return MonodromyOperator(self.steps[k:] + self.steps[:k], self.grid,
                                 self.record_trajectory, self.n_in, tags)

    def trajectory(self, u0):
        """Scaled states after each step: ``(times, log_gains, vectors)``.

        Vectors are embedded on the full grid where a step provides ``embed``.
        ``times`` starts at 0 and ``vectors[0]`` is ``u0``.
        """
        u = np.asarray(u0, dtype=float)
        times = [0.0]
        gains = [0.0]
        vecs = [u.copy()]
        gain = 0.0
        t = 0.0
        for s in self.steps:
            u = s.forward(u)
            gain -= s.log_scale
            u, gain = _renorm(u, gain)
            t += s.dt
            times.append(getattr(s, "t_end", t))
            gains.append(gain)
            embed = getattr(s, "embed", None)
            vecs.append(embed(u) if embed is not None else u.copy())
        times[-1] = self.period
        return np.array(times), np.array(gains), vecs


def _renorm(u, gain):
    peak = float(np.max(np.abs(u)))
    if peak > 0.0 and np.isfinite(peak):
        return u / peak, gain + math.log(peak)
    return u, gain


def _step_time(grid, k):
    # frozen at the right endpoint t_k, with t_nt identified with t_0
    return grid.t_nodes[k % grid.nt]


def monodromy_from_coefficients(coefficients, grid, alpha, boundary=None, theta=1.0,
                                record_trajectory=True):
    """Period map of ``u_t + L(t) u = 0`` for bare coefficients."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    boundary = boundary or BoundaryPair()
    x = grid.x_nodes
    dt = grid.dt
    ops = [assemble_at(coefficients, x, _step_time(grid, k), float(alpha), boundary)
           for k in range(grid.nt)]
    steps = []
    cache = None
    for k in range(1, grid.nt + 1):
        op = ops[k % grid.nt]
        prev = ops[k - 1]
        factor = None
        if cache is not None and _same_transport(cache[0], op):
            factor = cache[1]
        step = SolveStep(op, prev, dt, theta, grid.t_nodes[k], factor)
        cache = (op, step.factor)
        steps.append(step)
    if theta < 1.0:
        # the explicit half stays a nonnegative matrix only while (1-theta) dt a_ii <= 1
        worst = max(float(np.max(o.transport().diag)) for o in ops)
        if (1.0 - theta) * dt * worst > 1.0:
            log.warning("theta=%g with dt=%g loses positivity of the explicit part; "
                        "high modes may dominate the power iteration", theta, dt)
    return MonodromyOperator(steps, grid, record_trajectory)


def _same_transport(a, b):
    return (np.array_equal(a.sub, b.sub) and np.array_equal(a.sup, b.sup)
            and np.array_equal(a.diag - a.potential, b.diag - b.potential))


def build_monodromy(scenario, grid, alpha, theta=1.0, record_trajectory=True):
    """Period map of the full problem for ``scenario`` at advection ``alpha``."""
    if grid.period != scenario.period:
        grid = grid.with_period(scenario.period)
    return monodromy_from_coefficients(scenario.coefficients, grid, alpha,
                                       scenario.boundary, theta, record_trajectory)


@dataclass
class EigenResult:
    """Principal eigenvalue with its periodic eigenfunction.

    ``eigenfunction[:, j]`` samples the eigenfunction at ``times[j]`` on
    ``x_nodes``; it is sup-normalized at ``t = 0``.
    """

    lam: float
    residual: float
    iterations: int
    eigenfunction: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None
    x_nodes: Optional[np.ndarray] = None
    restarts: int = 0
    column_labels: Optional[list] = None

    @property
    def spectral_radius(self):
        return math.exp(-self.lam * (self.times[-1] if self.times is not None else 1.0))

    def to_dict(self):
        return {"lambda": self.lam, "residual": self.residual, "iterations": self.iterations}


def _rayleigh(w, u):
    # weighted l1 ratio; both vectors are nonnegative for positive maps
    su = float(np.sum(u))
    if su == 0.0:
        return 0.0
    return float(np.sum(w)) / su


def principal_eigenvalue(M, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, start=None,
                         seed=0, stall=2000, method="power"):
    """Power iteration on the period map ``M``.

    Iterates from ``start`` (default the all-ones vector) with sup-norm
    normalization.  The ratio ``rho = sum(Mu)/sum(u)`` is the Rayleigh
    estimate; iteration stops once the relative residual
    ``||Mu - rho u|| / (rho ||u||)`` and the relative change of ``rho`` both
    fall below ``tol``.  If the residual has not improved for ``stall``
    iterations the iteration restarts from a seeded random positive vector.

    Raises
    ------
    NoConvergence
        After ``max_iter`` iterations, carrying the last residual.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method == "arnoldi":
        return _arnoldi(M, tol, max_iter)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    T = M.period
    rng = np.random.default_rng(seed)
    u = np.ones(M.n_in) if start is None else np.array(start, dtype=float)
    u, _ = _renorm(u, 0.0)
    log_rho = None
    prev_rho = None
    residual = math.inf
    best = math.inf
    since_best = 0
    restarts = 0
    for it in range(1, max_iter + 1):
        w, g = M.apply_scaled(u)
        rho = _rayleigh(w, u)
        if rho <= 0.0 or not np.isfinite(rho):
            raise NoConvergence(it, float("nan"))
        residual = float(np.max(np.abs(w - rho * u))) / (rho * float(np.max(np.abs(u))))
        log_rho = g + math.log(rho)
        converged = (residual < tol and prev_rho is not None
                     and abs(log_rho - prev_rho) < tol)
        if converged:
            lam = -log_rho / T
            res = EigenResult(lam, residual, it, restarts=restarts)
            if M.record_trajectory:
                _attach_trajectory(M, u, lam, res)
            return res
        prev_rho = log_rho
        if residual < best * 0.999:
            best = residual
            since_best = 0
        else:
            since_best += 1
            if since_best >= stall:
                since_best = 0
                best = math.inf
                restarts += 1
                w = rng.uniform(0.5, 1.5, size=M.n_in)
                prev_rho = None
        u, _ = _renorm(w, 0.0)
    raise NoConvergence(max_iter, residual)


def _attach_trajectory(M, u0, lam, res):
    times, gains, vecs = M.trajectory(u0)
    # phi(t) = exp(lambda t) u(t) solves the periodic eigenproblem
    scale = np.exp(lam * times + gains)
    phi = np.column_stack([v * s for v, s in zip(vecs, scale)])
    phi /= np.max(np.abs(phi[:, 0]))
    res.eigenfunction = phi
    res.times = times
    res.x_nodes = M.grid.x_nodes


def _arnoldi(M, tol, max_iter):
    from scipy.sparse.linalg import LinearOperator, eigs

    n = M.n_in
    _, g0 = M.apply_scaled(np.ones(n))

    def mv(v):
        w, g = M.apply_scaled(np.asarray(v, dtype=float).ravel())
        return w * math.exp(g - g0)

    op = LinearOperator((n, n), matvec=mv, dtype=float)
    vals, vecs = eigs(op, k=1, which="LM", tol=tol, maxiter=max_iter, v0=np.ones(n))
    rho = float(vals[0].real)
    u = np.abs(vecs[:, 0].real)
    u /= u.max()
    w = mv(u)
    residual = float(np.max(np.abs(w - rho * u))) / rho
    lam = -(math.log(rho) + g0) / M.period
    res = EigenResult(lam, residual, 0)
    if M.record_trajectory:
        _attach_trajectory(M, u, lam, res)
    return res


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class GridPolicy:
    """Grid as a function of ``alpha``: ``nx = max(nx0, ceil(c_x alpha))`` and alike for ``nt``.

    ``nx``/``nt`` override the rule when given.
    """

    nx0: int = 201
    c_x: float = 4.0
    nt0: int = 400
    c_t: float = 2.0
    nx: Optional[int] = None
    nt: Optional[int] = None

    def grid(self, alpha, period):
        nx = self.nx if self.nx is not None else max(self.nx0, math.ceil(self.c_x * alpha))
        nt = self.nt if self.nt is not None else max(self.nt0, math.ceil(self.c_t * alpha))
        return SpaceTimeGrid(int(nx), int(nt), period)


@dataclass
class SweepRow:
    alpha: float
    lam: float
    residual: float
    iterations: int
    nx: int
    nt: int
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class SweepTable:
    scenario: str
    rows: list = field(default_factory=list)

    HEADER = ("alpha", "lambda", "residual", "iterations", "nx", "nt")

    @property
    def complete(self):
        return all(r.ok for r in self.rows)

    def lambdas(self):
        return np.array([r.lam for r in self.rows])

    def to_csv(self):
        lines = [",".join(self.HEADER)]
        for r in self.rows:
            lines.append(",".join([_g(r.alpha), _g(r.lam), _g(r.residual),
                                   str(r.iterations), str(r.nx), str(r.nt)]))
        return "\n".join(lines) + "\n"


def _g(v):
    return format(float(v), ".17g")


def _sweep_row(args):
    scenario, alpha, policy, tol, max_iter, theta, seed = args
    grid = policy.grid(alpha, scenario.period)
    M = build_monodromy(scenario, grid, alpha, theta, record_trajectory=False)
    try:
        res = principal_eigenvalue(M, tol, max_iter, seed=seed)
    except NoConvergence as exc:
        return SweepRow(alpha, float("nan"), exc.last_residual, exc.max_iter,
                        grid.nx, grid.nt, str(exc))
    return SweepRow(alpha, res.lam, res.residual, res.iterations, grid.nx, grid.nt)


def alpha_sweep(scenario, alphas, grid_policy=None, tol=DEFAULT_TOL,
                max_iter=DEFAULT_MAX_ITER, theta=1.0, jobs=1, seed=0):
    """Principal eigenvalue for each ``alpha``; failed rows are marked, not raised."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be sorted ascending")
    policy = grid_policy or GridPolicy()
    tasks = [(scenario, a, policy, tol, max_iter, theta, seed) for a in alphas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    return SweepTable(scenario.name, rows)
