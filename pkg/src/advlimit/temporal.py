"""
Limit problems for drifts that degenerate in time.

When ``dxm(x, t) = b(t)`` the period splits into segments where ``b < 0``
(label A), ``b = 0`` (label B) or ``b > 0`` (label C).  As ``alpha`` grows the
period map tends to a composition of

* on A: collapse to the value at ``x = 0``, then decay by ``exp(-int V(0, s) ds)``;
* on C: collapse to the value at ``x = 1``, then decay by ``exp(-int V(1, s) ds)``;
* on B: the drift-free Neumann problem.

The limit eigenvalue is ``-ln(r(K)) / T`` for this composite map ``K``.  The
same machinery builds the mixed problem whose drift vanishes on a strip for
part of the period and everywhere for the rest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .discretize import BoundaryPair, assemble_at
from .errors import AdvLimitError, AmbiguousSign, ValidationError
from .floquet import (
    DEFAULT_MAX_ITER, DEFAULT_TOL, DecayStep, MonodromyOperator, SolveStep,
    principal_eigenvalue,
)
from .scenario import Label

EPS_SIGN = 1e-8
PLATEAU_MIN = 3
DECAY_PANELS = 8
MIN_SEGMENT = 1e-6

A, B, C = Label.NEG, Label.ZERO, Label.POS


@dataclass(frozen=True)
class TemporalPartition:
    """Segment boundaries ``0 = t_0 < ... < t_{N+1} = T`` and one label per segment."""

    times: tuple
    labels: tuple

    def __post_init__(self):
        if len(self.times) != len(self.labels) + 1:
            raise ValidationError("a partition needs one more time than labels")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("partition times must be strictly increasing")

    @property
    def period(self):
        return self.times[-1]

    def segments(self):
        return list(zip(self.times[:-1], self.times[1:], self.labels))

    def __str__(self):
        return " ".join(f"[{a:.6g},{b:.6g}]{lab.value}" for a, b, lab in self.segments())


def _sign_class(values, eps):
    return np.where(values > eps, 1, np.where(values < -eps, -1, 0))


def _runs(cls):
    """Cyclic runs of equal entries as ``(start, length, value)``."""
    n = cls.size
    if np.all(cls == cls[0]):
        return [(0, n, int(cls[0]))]
    start = int(np.flatnonzero(cls != np.roll(cls, 1))[0])
    runs = []
    k = 0
    while k < n:
        i = (start + k) % n
        v = cls[i]
        length = 1
        while length < n - k and cls[(start + k + length) % n] == v:
            length += 1
        runs.append((i, length, int(v)))
        k += length
    return runs


def _refine(b, lo, hi, kind):
    """Locate a segment boundary between sample times ``lo < hi``."""
    if kind == "root":
        flo, fhi = b(lo), b(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if (flo > 0) == (fhi > 0):
            return lo
        return brentq(b, lo, hi, xtol=1e-14, rtol=1e-14)
    # edge of a plateau: bisect on "b is (numerically) zero"
    lo_zero = kind == "plateau_end"
    scale = EPS_SIGN * 1e-6
    a, z = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + z)
        if mid <= a or mid >= z:
            break
        is_zero = abs(b(mid)) <= scale
        if is_zero == lo_zero:
            a = mid
        else:
            z = mid
    return 0.5 * (a + z)


def partition_time(b, period, nt=400, hint=None, eps=EPS_SIGN):
    """Split ``[0, T]`` by the sign of ``b``.

    With ``hint`` the given times are taken as boundaries and each segment's
    label is read off from interior samples, which must agree.  Without it,
    ``b`` is sampled on ``nt`` points: runs of at least three near-zero samples
    are plateaus, single near-zero samples are absorbed by their signed
    neighbours, and boundaries are refined by root finding.

    Raises
    ------
    AmbiguousSign
        When ``b`` stays within ``eps`` of zero for exactly two samples, or a
        hinted segment mixes signs.
    """
    bf = _scalar(b)
    T = float(period)
    if hint is not None:
        times = (0.0, *[float(h) for h in hint], T)
        labels = []
        for a, z in zip(times[:-1], times[1:]):
            ts = a + (z - a) * (np.arange(1, 16) / 16.0)
            cls = set(_sign_class(np.array([bf(t) for t in ts]), eps).tolist())
            if len(cls - {0}) > 1 or (0 in cls and len(cls) > 1 and _zeros_not_isolated(bf, ts, eps)):
                raise AmbiguousSign(f"b changes sign inside hinted segment [{a:.6g},{z:.6g}]")
            signed = cls - {0}
            labels.append({1: C, -1: A}[signed.pop()] if signed else B)
        return TemporalPartition(times, tuple(labels))

    ts = T * np.arange(nt) / nt
    cls = _sign_class(np.array([bf(t) for t in ts]), eps)
    runs = _runs(cls)
    if len(runs) == 1:
        lab = {1: C, -1: A, 0: B}[runs[0][2]]
        return TemporalPartition((0.0, T), (lab,))
    # absorb isolated zeros, reject two-sample near-zero stretches
    for start, length, v in runs:
        if v == 0 and length < PLATEAU_MIN:
            if length == 2:
                raise AmbiguousSign(
                    f"b is within {eps:g} of zero on two samples near t={ts[start]:.6g}"
                )
            prev_v = cls[(start - 1) % nt]
            nxt_v = cls[(start + 1) % nt]
            cls[start] = prev_v if prev_v != 0 else nxt_v
    runs = _runs(cls)
    if len(runs) == 1:
        lab = {1: C, -1: A, 0: B}[runs[0][2]]
        return TemporalPartition((0.0, T), (lab,))

    bounds = []
    for k, (start, length, v) in enumerate(runs):
        nxt = runs[(k + 1) % len(runs)][2]
        last = start + length - 1
        lo = T * last / nt
        hi = T * (last + 1) / nt
        if v != 0 and nxt != 0:
            kind = "root"
        elif v == 0:
            kind = "plateau_end"
        else:
            kind = "plateau_start"
        t_b = _refine(lambda s: bf(s % T), lo, hi, kind) % T
        if t_b >= T * (1.0 - MIN_SEGMENT):
            t_b = 0.0
        bounds.append((t_b, nxt))
    bounds.sort()
    times = [0.0]
    labels = []
    # the label in force at t = 0 is the one entered at the last boundary
    current = bounds[-1][1]
    for t_b, lab_next in bounds:
        # slivers left by tangential contact with zero are merged
        if t_b <= times[-1] + MIN_SEGMENT * T:
            current = lab_next
            continue
        times.append(t_b)
        labels.append(current)
        current = lab_next
    times.append(T)
    labels.append(current)
    to_label = {1: C, -1: A, 0: B}
    return TemporalPartition(tuple(times), tuple(to_label[v] for v in labels))


def _zeros_not_isolated(bf, ts, eps):
    cls = _sign_class(np.array([bf(t) for t in ts]), eps)
    zero = cls == 0
    return bool(np.any(zero[1:] & zero[:-1]))


def _scalar(b):
    def f(t):
        return float(np.asarray(b(t)))
    return f


class ResetStep:
    """A linear, positivity-preserving map applied at one instant.

    Kinds: ``left`` (``u -> u[0] * 1``), ``right`` (``u -> u[-1] * 1``),
    ``identity``, ``restrict`` (keep nodes ``i1..i2``) and ``extend`` (the
    inverse of ``restrict``, filling outside nodes with the nearest kept value).
    """

    KINDS = ("left", "right", "identity", "restrict", "extend")

    def __init__(self, kind, t_end=0.0, i1=None, i2=None, n_full=None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown reset kind {kind!r}")
        self.kind = kind
        self.t_end = float(t_end)
        self.dt = 0.0
        self.log_scale = 0.0
        self.i1 = i1
        self.i2 = i2
        self.n_full = n_full
        self.embed = self._extend if kind == "restrict" else None

    def _extend(self, v):
        out = np.empty(self.n_full)
        out[: self.i1] = v[0]
        out[self.i1: self.i2 + 1] = v
        out[self.i2 + 1:] = v[-1]
        return out

    def forward(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "left":
            return np.full_like(u, u[0])
        if self.kind == "right":
            return np.full_like(u, u[-1])
        if self.kind == "identity":
            return u.copy()
        if self.kind == "restrict":
            return u[self.i1: self.i2 + 1].copy()
        return self._extend(u)

    def backward(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "left":
            out = np.zeros_like(v)
            out[0] = v.sum()
            return out
        if self.kind == "right":
            out = np.zeros_like(v)
            out[-1] = v.sum()
            return out
        if self.kind == "identity":
            return v.copy()
        if self.kind == "restrict":
            out = np.zeros(self.n_full)
            out[self.i1: self.i2 + 1] = v
            return out
        out = v[self.i1: self.i2 + 1].copy()
        out[0] += v[: self.i1].sum()
        out[-1] += v[self.i2 + 1:].sum()
        return out


def _n_sub(length, dt):
    return max(1, int(round(length / dt)))


def _decay_steps(V, x_at, a, z, dt, n, embed=None):
    k = _n_sub(z - a, dt)
    edges = a + (z - a) * np.arange(k + 1) / k
    edges[-1] = z
    steps = []
    for s0, s1 in zip(edges[:-1], edges[1:]):
        s = np.linspace(s0, s1, DECAY_PANELS + 1)
        integral = float(simpson(V(x_at, s), x=s))
        steps.append(DecayStep(integral, s1 - s0, s1, n, embed))
    return steps


def _pde_steps(coefficients, x, a, z, dt, theta, embed=None):
    k = _n_sub(z - a, dt)
    edges = a + (z - a) * np.arange(k + 1) / k
    edges[-1] = z
    bnd = BoundaryPair()
    ops = [assemble_at(coefficients, x, t, 0.0, bnd) for t in edges]
    return [SolveStep(ops[j + 1], ops[j], edges[j + 1] - edges[j], theta, edges[j + 1],
                      embed=embed) for j in range(k)]


def build_period_operator(scenario, partition, grid, theta=1.0):
    """Composite period map of the temporal limit problem."""
    c = scenario.coefficients
    T = c.period
    if abs(partition.period - T) > 1e-12 * T:
        raise ValidationError("partition does not span one period")
    grid = grid.with_period(T) if grid.period != T else grid
    x = grid.x_nodes
    n = x.size
    steps, tags = [], []
    for a, z, lab in partition.segments():
        if lab is A:
            seg = [ResetStep("left", a)] + _decay_steps(c.V, 0.0, a, z, grid.dt, n)
        elif lab is C:
            seg = [ResetStep("right", a)] + _decay_steps(c.V, 1.0, a, z, grid.dt, n)
        else:
            seg = [ResetStep("identity", a)] + _pde_steps(c, x, a, z, grid.dt, theta)
        steps += seg
        tags += [lab] * len(seg)
    return MonodromyOperator(steps, grid, tags=tags)


def scenario_partition(scenario, grid):
    c = scenario.coefficients
    if c.b is None:
        raise ValidationError(f"scenario {scenario.name!r} has no temporal drift b")
    return partition_time(c.b_at, c.period, grid.nt, scenario.temporal_partition_hint)


def limit_eigenvalue_temporal(scenario, grid, partition=None, tol=DEFAULT_TOL,
                              max_iter=DEFAULT_MAX_ITER, start=None, seed=0):
    """Principal eigenvalue of the temporal limit problem.

    The eigenfunction is checked to be constant in ``x`` on every A/C segment.
    """
    if partition is None:
        partition = scenario_partition(scenario, grid)
    M = build_period_operator(scenario, partition, grid)
    res = principal_eigenvalue(M, tol, max_iter, start=start, seed=seed)
    res.column_labels = [None] + list(M.tags)
    spread = constant_in_x_spread(res)
    if spread > 1e-10:
        raise AdvLimitError(f"eigenfunction varies by {spread:.3g} on a collapse segment")
    return res


def constant_in_x_spread(res):
    """Largest relative spread in ``x`` of the eigenfunction over A/C columns."""
    worst = 0.0
    for j, lab in enumerate(res.column_labels):
        if lab is A or lab is C:
            col = res.eigenfunction[:, j]
            peak = np.max(np.abs(col))
            if peak > 0:
                worst = max(worst, float(np.ptp(col) / peak))
    return worst


def snap(kappa, grid):
    return int(round((kappa - grid.x0) / grid.dx))


def build_mixed_operator(scenario, kappa1, kappa2, t_star, grid, theta=1.0):
    """Strip problem on ``[kappa1, kappa2]`` over ``(0, t_star]``, full problem after.

    Both ends are snapped to grid nodes.  A strip of a single node evolves
    by the scalar decay ``exp(-int V(kappa, s) ds)``.
    """
    c = scenario.coefficients
    T = c.period
    if not (0.0 < kappa1 <= kappa2 < 1.0):
        raise ValidationError("need 0 < kappa1 <= kappa2 < 1")
    if not 0.0 < t_star < T:
        raise ValidationError("need 0 < t_star < T")
    grid = grid.with_period(T) if grid.period != T else grid
    x = grid.x_nodes
    n = x.size
    i1, i2 = snap(kappa1, grid), snap(kappa2, grid)
    restrict = ResetStep("restrict", 0.0, i1, i2, n)
    steps = [restrict]
    xs = x[i1: i2 + 1]
    if i1 == i2:
        steps += _decay_steps(c.V, float(xs[0]), 0.0, t_star, grid.dt, 1, restrict.embed)
    else:
        steps += _pde_steps(c, xs, 0.0, t_star, grid.dt, theta, restrict.embed)
    steps.append(ResetStep("extend", t_star, i1, i2, n))
    steps += _pde_steps(c, x, t_star, T, grid.dt, theta)
    return MonodromyOperator(steps, grid)


def mixed_degenerate_eigenvalue(scenario, kappa1, kappa2, t_star, grid, tol=DEFAULT_TOL,
                                max_iter=DEFAULT_MAX_ITER):
    M = build_mixed_operator(scenario, kappa1, kappa2, t_star, grid)
    return principal_eigenvalue(M, tol, max_iter)


def trajectory_csv(result):
    """Eigenfunction samples as ``t,x,value`` rows (one per node per time slice)."""
    lines = ["t,x,value"]
    for j, t in enumerate(result.times):
        tt = format(float(t), ".17g")
        for xv, val in zip(result.x_nodes, result.eigenfunction[:, j]):
            lines.append(f"{tt},{format(float(xv), '.17g')},{format(float(val), '.17g')}")
    return "\n".join(lines) + "\n"


def closed_form_no_plateau(scenario, partition, quad_n=256):
    """``(1/T) [sum_A int V(0, s) ds + sum_C int V(1, s) ds]`` when no segment is B."""
    c = scenario.coefficients
    total = 0.0
    for a, z, lab in partition.segments():
        if lab is B:
            raise ValidationError("partition has a zero-drift segment")
        s = np.linspace(a, z, quad_n + 1)
        xb = 0.0 if lab is A else 1.0
        total += float(simpson(c.V(xb, s), x=s))
    return total / c.period

