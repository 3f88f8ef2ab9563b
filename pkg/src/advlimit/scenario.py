"""
Problem instances: coefficients, boundary setup, critical-curve annotations
and the expected large-advection limit, plus the TOML file format.

Every coefficient callable takes ``(x, t)`` and broadcasts.  Functions that
only depend on ``t`` (the drift ``b``, the curves) are called with ``x = 0``.

File format (all keys except ``name``, ``T`` and ``expressions`` optional)::

    name = "plateau-nn"
    description = "free text"
    T = 1.0
    D = 1.0
    labels = ["C", "B", "A"]          # A: dxm<0, B: dxm=0, C: dxm>0
    partition_hint = [0.5]            # temporal segment boundaries in (0, T)

    [expressions]                     # over x, t, pi, T
    m = "..."
    dxm = "..."
    V = "..."
    b = "..."                         # only when dxm depends on t alone

    [boundary]
    left = "neumann"                  # neumann | dirichlet | robin
    right = "neumann"
    eta = 0.0                         # used by robin ends
    form = "neumann"                  # robin form: neumann | dirichlet

    [[curves]]                        # in increasing order
    expr = "0.3 + 0.1*sin(2*pi*t/T)"
    rate = "0.2*pi/T*cos(2*pi*t/T)"   # optional when expr is constant

    [expected_limit]
    kind = "spatial"                  # nondegenerate | spatial | temporal | mixed | explicit
    value = 0.25                      # target for explicit, reference otherwise
    kappa1 = 0.4                      # mixed only
    kappa2 = 0.6
    t_star = 0.5

When ``labels`` is given the curve list must start with ``0`` and end with
``1`` and hold one more entry than ``labels``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .discretize import (
    DIRICHLET, NEUMANN, ROBIN, BoundaryKind, BoundaryPair,
)
from .errors import ParseError, ValidationError
from .expr import Expr

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import tomli_w

EPS_SIGN = 1e-8
PERIODIC_RTOL = 1e-10
DRIFT_TOL = 1e-10
RATE_STEP = 1e-5
RATE_TOL = 1e-6
SLOPE_TOL = 1e-6


class Label(enum.Enum):
    NEG = "A"
    ZERO = "B"
    POS = "C"

    @classmethod
    def parse(cls, text):
        key = str(text).strip().upper()
        aliases = {"A": cls.NEG, "NEG": cls.NEG, "B": cls.ZERO, "ZERO": cls.ZERO,
                   "C": cls.POS, "POS": cls.POS}
        if key not in aliases:
            raise ParseError(f"unknown interval label {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class Coefficients:
    """Coefficients of ``phi_t - D phi_xx - alpha dxm phi_x + V phi = lambda phi``.

    ``frame_drift`` and ``scale`` are only set by moving-interval transforms:
    the first is an extra first-order coefficient that does not scale with
    ``alpha``, the second the physical length of the unit grid interval
    (used to convert Robin parameters).  ``diffusion`` may be a function of
    ``t`` in transformed problems.
    """

    period: float
    m: Callable
    dxm: Callable
    V: Callable
    b: Optional[Callable] = None
    diffusion: float | Callable = 1.0
    frame_drift: Optional[Callable] = None
    scale: Optional[Callable] = None

    def __post_init__(self):
        if not (np.isfinite(self.period) and self.period > 0):
            raise ValidationError("period T must be positive")
        if not callable(self.diffusion) and not self.diffusion > 0:
            raise ValidationError("diffusion D must be positive")

    def diffusion_at(self, t):
        if callable(self.diffusion):
            return float(self.diffusion(t))
        return float(self.diffusion)

    def scale_at(self, t):
        return 1.0 if self.scale is None else float(self.scale(t))

    def b_at(self, t):
        if self.b is None:
            raise ValidationError("scenario has no temporal drift b")
        return self.b(0.0, t)

    def with_potential(self, V):
        return replace(self, V=V)

    def shifted(self, c):
        """Same coefficients with ``V + c``."""
        V = self.V
        return replace(self, V=_Shifted(V, float(c)))


class _Shifted:
    __slots__ = ("f", "c")

    def __init__(self, f, c):
        self.f = f
        self.c = c

    def __call__(self, x=0.0, t=0.0):
        return self.f(x, t) + self.c


class Curve:
    """A curve ``t -> kappa(t)`` with an optional closed-form rate."""

    __slots__ = ("value", "rate_fn")

    def __init__(self, value, rate=None):
        self.value = value
        self.rate_fn = rate

    @classmethod
    def constant(cls, c):
        return cls(Expr(repr(float(c))), Expr("0"))

    def __call__(self, t):
        return self.value(0.0, t)

    def rate(self, t):
        if self.rate_fn is None:
            raise ValidationError(f"curve {self!r} has no closed-form rate")
        return self.rate_fn(0.0, t)

    @property
    def has_rate(self):
        return self.rate_fn is not None

    def __repr__(self):
        src = getattr(self.value, "source", self.value)
        return f"Curve({src!r})"


@dataclass(frozen=True)
class CurveAnnotation:
    """Critical curves of ``m`` and, optionally, labels of the gaps between them."""

    curves: tuple
    labels: Optional[tuple] = None

    @property
    def n_intervals(self):
        return len(self.curves) - 1


@dataclass(frozen=True)
class ExpectedLimit:
    kind: str
    value: Optional[float] = None
    params: dict = field(default_factory=dict)

    KINDS = ("nondegenerate", "spatial", "temporal", "mixed", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParseError(f"unknown expected_limit kind {self.kind!r}")
        if self.kind == "explicit" and self.value is None:
            raise ParseError("explicit expected_limit needs a value")
        if self.kind == "mixed":
            missing = {"kappa1", "kappa2", "t_star"} - set(self.params)
            if missing:
                raise ParseError(f"mixed expected_limit missing {sorted(missing)}")


@dataclass(frozen=True)
class Scenario:
    name: str
    coefficients: Coefficients
    boundary: BoundaryPair = field(default_factory=BoundaryPair)
    annotation: Optional[CurveAnnotation] = None
    temporal_partition_hint: Optional[tuple] = None
    expected_limit: Optional[ExpectedLimit] = None
    description: str = ""

    @property
    def period(self):
        return self.coefficients.period

    def shifted(self, c):
        return replace(self, coefficients=self.coefficients.shifted(c))


# ---------------------------------------------------------------- parsing

_TOP_KEYS = {"name", "description", "T", "D", "expressions", "boundary", "curves",
             "labels", "partition_hint", "expected_limit"}
_EXPR_KEYS = {"m", "dxm", "V", "b"}
_BOUNDARY_KEYS = {"left", "right", "eta", "form"}
_CURVE_KEYS = {"expr", "rate"}
_LIMIT_KEYS = {"kind", "value", "kappa1", "kappa2", "t_star"}


def _reject_unknown(table, allowed, where):
    if not isinstance(table, dict):
        raise ParseError(f"{where} must be a table")
    extra = set(table) - allowed
    if extra:
        raise ParseError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where} must be a number")
    return float(value)


def _boundary_kind(name, eta, form):
    name = str(name).lower()
    if name == NEUMANN:
        return BoundaryKind(NEUMANN)
    if name == DIRICHLET:
        return BoundaryKind(DIRICHLET)
    if name == ROBIN:
        return BoundaryKind(ROBIN, eta, form)
    raise ParseError(f"unknown boundary kind {name!r}")


def scenario_from_dict(data, probe=33):
    """Build and validate a :class:`Scenario` from the file-format mapping."""
    _reject_unknown(data, _TOP_KEYS, "scenario")
    for key in ("name", "T", "expressions"):
        if key not in data:
            raise ParseError(f"missing required key {key!r}")
    name = str(data["name"])
    T = _number(data["T"], "T")
    D = _number(data.get("D", 1.0), "D")
    if not T > 0:
        raise ParseError("T must be positive")
    if not D > 0:
        raise ParseError("D must be positive")
    params = {"T": T}

    exprs = data["expressions"]
    _reject_unknown(exprs, _EXPR_KEYS, "expressions")
    for key in ("m", "dxm", "V"):
        if key not in exprs:
            raise ParseError(f"missing expression {key!r}")
    compiled = {k: Expr(v, params) for k, v in exprs.items()}
    coeffs = Coefficients(T, compiled["m"], compiled["dxm"], compiled["V"],
                          compiled.get("b"), D)

    bnd = data.get("boundary", {})
    _reject_unknown(bnd, _BOUNDARY_KEYS, "boundary")
    eta = _number(bnd.get("eta", 0.0), "boundary.eta")
    form = str(bnd.get("form", NEUMANN)).lower()
    if form not in (NEUMANN, DIRICHLET):
        raise ParseError(f"unknown Robin form {form!r}")
    boundary = BoundaryPair(
        _boundary_kind(bnd.get("left", NEUMANN), eta, form),
        _boundary_kind(bnd.get("right", NEUMANN), eta, form),
    )

    annotation = None
    curves = data.get("curves")
    labels = data.get("labels")
    if labels is not None and curves is None:
        raise ParseError("labels given without curves")
    if curves is not None:
        if not isinstance(curves, list):
            raise ParseError("curves must be an array of tables")
        built = []
        for k, c in enumerate(curves):
            _reject_unknown(c, _CURVE_KEYS, f"curves[{k}]")
            if "expr" not in c:
                raise ParseError(f"curves[{k}] needs expr")
            value = Expr(str(c["expr"]), params)
            if "rate" in c:
                rate = Expr(str(c["rate"]), params)
            elif np.ptp(value(0.0, np.linspace(0.0, T, 65))) == 0.0:
                rate = Expr("0")
            else:
                rate = None
            built.append(Curve(value, rate))
        lab = None
        if labels is not None:
            if not isinstance(labels, list):
                raise ParseError("labels must be an array")
            lab = tuple(Label.parse(s) for s in labels)
        annotation = CurveAnnotation(tuple(built), lab)

    hint = data.get("partition_hint")
    if hint is not None:
        if not isinstance(hint, list):
            raise ParseError("partition_hint must be an array")
        hint = tuple(_number(h, "partition_hint") for h in hint)

    expected = None
    if "expected_limit" in data:
        lim = data["expected_limit"]
        _reject_unknown(lim, _LIMIT_KEYS, "expected_limit")
        if "kind" not in lim:
            raise ParseError("expected_limit needs kind")
        value = lim.get("value")
        value = None if value is None else _number(value, "expected_limit.value")
        extra = {k: _number(lim[k], f"expected_limit.{k}")
                 for k in ("kappa1", "kappa2", "t_star") if k in lim}
        expected = ExpectedLimit(str(lim["kind"]), value, extra)

    scenario = Scenario(name, coeffs, boundary, annotation, hint, expected,
                        str(data.get("description", "")))
    validate(scenario, probe)
    return scenario


def scenario_to_dict(scenario):
    """Inverse of :func:`scenario_from_dict`; needs expression-backed coefficients."""
    c = scenario.coefficients
    if callable(c.diffusion) or c.frame_drift is not None or c.scale is not None:
        raise ValidationError("transformed coefficients cannot be serialized")

    def src(f, what):
        if not isinstance(f, Expr):
            raise ValidationError(f"{what} is not an expression and cannot be serialized")
        return f.source

    out = {"name": scenario.name}
    if scenario.description:
        out["description"] = scenario.description
    out["T"] = float(c.period)
    out["D"] = float(c.diffusion)
    ann = scenario.annotation
    if ann is not None and ann.labels is not None:
        out["labels"] = [lab.value for lab in ann.labels]
    if scenario.temporal_partition_hint is not None:
        out["partition_hint"] = [float(h) for h in scenario.temporal_partition_hint]
    exprs = {"m": src(c.m, "m"), "dxm": src(c.dxm, "dxm"), "V": src(c.V, "V")}
    if c.b is not None:
        exprs["b"] = src(c.b, "b")
    out["expressions"] = exprs
    bnd = {"left": scenario.boundary.left.kind, "right": scenario.boundary.right.kind}
    robin = [k for k in (scenario.boundary.left, scenario.boundary.right) if k.kind == ROBIN]
    if robin:
        bnd["eta"] = robin[0].eta
        bnd["form"] = robin[0].form
    out["boundary"] = bnd
    if ann is not None:
        curves = []
        for cv in ann.curves:
            entry = {"expr": src(cv.value, "curve")}
            if cv.rate_fn is not None:
                entry["rate"] = src(cv.rate_fn, "curve rate")
            curves.append(entry)
        out["curves"] = curves
    if scenario.expected_limit is not None:
        lim = {"kind": scenario.expected_limit.kind}
        if scenario.expected_limit.value is not None:
            lim["value"] = float(scenario.expected_limit.value)
        lim.update({k: float(v) for k, v in scenario.expected_limit.params.items()})
        out["expected_limit"] = lim
    return out


def loads(text, probe=33):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"malformed scenario file: {exc}") from None
    return scenario_from_dict(data, probe)


def load_scenario(path, probe=33):
    """Read a scenario file and validate it on a ``probe x probe`` grid."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, probe)


def dumps(scenario):
    return tomli_w.dumps(scenario_to_dict(scenario))


def dump_scenario(scenario, path):
    Path(path).write_text(dumps(scenario), encoding="utf-8")


# ------------------------------------------------------------- validation

def _fmt(v):
    return f"{float(v):.6g}"


def _check_periodic(f, name, xx, tt, T):
    a = f(xx, tt)
    b = f(xx, tt + T)
    bad = np.abs(b - a) > PERIODIC_RTOL * (1.0 + np.abs(a))
    bad |= ~np.isfinite(a)
    if bad.any():
        i = np.argwhere(bad)[0]
        raise ValidationError(
            f"{name} is not T-periodic or not finite at x={_fmt(xx[tuple(i)])}, t={_fmt(tt[tuple(i)])}"
        )


def _curve_gap_min(lo, hi, T, ts):
    gaps = hi(ts) - lo(ts)
    k = int(np.argmin(gaps))
    t0 = ts[k]
    if gaps[k] <= 0:
        # refine the location of the worst violation for the message
        width = T / (len(ts) - 1)
        res = minimize_scalar(lambda s: float(hi(s) - lo(s)),
                              bounds=(max(0.0, t0 - width), min(T, t0 + width)),
                              method="bounded", options={"xatol": 1e-10})
        if res.fun <= gaps[k]:
            t0 = res.x
    return gaps[k], t0


def validate(scenario, probe=33):
    """Check the scenario invariants on a ``probe x probe`` sample grid.

    Raises :class:`ValidationError` naming the offending sample point.
    """
    c = scenario.coefficients
    T = c.period
    xs = np.linspace(0.0, 1.0, probe)
    ts = np.linspace(0.0, T, probe)
    xx, tt = np.meshgrid(xs, ts, indexing="ij")

    for name in ("m", "dxm", "V"):
        _check_periodic(getattr(c, name), name, xx, tt, T)
    if c.b is not None:
        _check_periodic(c.b, "b", xx, tt, T)
        bvals = c.b(0.0, ts)[None, :]
        diff = np.abs(c.dxm(xx, tt) - bvals)
        if (diff > DRIFT_TOL).any():
            i = np.unravel_index(int(np.argmax(diff)), diff.shape)
            raise ValidationError(
                f"dxm differs from b at x={_fmt(xx[i])}, t={_fmt(tt[i])}"
            )

    # dxm is supplied, never differenced; this only catches typos
    h = RATE_STEP
    xi = np.clip(xx, 2 * h, 1.0 - 2 * h)
    fd = (8 * (c.m(xi + h, tt) - c.m(xi - h, tt))
          - (c.m(xi + 2 * h, tt) - c.m(xi - 2 * h, tt))) / (12 * h)
    ex = c.dxm(xi, tt)
    err = np.abs(fd - ex)
    tol = SLOPE_TOL * (1.0 + np.abs(ex) + np.abs(c.m(xi, tt)))
    if (err > tol).any():
        i = np.unravel_index(int(np.argmax(err - tol)), err.shape)
        raise ValidationError(
            f"dxm is not the x-derivative of m at x={_fmt(xi[i])}, t={_fmt(tt[i])}"
        )

    ann = scenario.annotation
    if ann is not None:
        _validate_annotation(ann, c, ts, T)

    hint = scenario.temporal_partition_hint
    if hint is not None:
        h_arr = np.asarray(hint, dtype=float)
        if h_arr.size and (np.any(h_arr <= 0) or np.any(h_arr >= T)):
            raise ValidationError("partition_hint times must lie in (0, T)")
        if np.any(np.diff(h_arr) <= 0):
            raise ValidationError("partition_hint must be strictly increasing")

    lim = scenario.expected_limit
    if lim is not None and lim.kind == "mixed":
        k1, k2, ts_ = lim.params["kappa1"], lim.params["kappa2"], lim.params["t_star"]
        if not (0.0 < k1 <= k2 < 1.0 and 0.0 < ts_ < T):
            raise ValidationError("mixed limit needs 0<kappa1<=kappa2<1 and 0<t_star<T")


def _validate_annotation(ann, c, ts, T):
    curves = ann.curves
    if not curves:
        raise ValidationError("curve list is empty")
    for k, cv in enumerate(curves):
        vals = cv(ts)
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            j = int(np.argmax(np.maximum(-vals, vals - 1.0)))
            raise ValidationError(f"curve {k} leaves [0,1] at t={_fmt(ts[j])}")
        per = np.abs(cv(ts + T) - vals)
        if np.any(per > PERIODIC_RTOL * (1 + np.abs(vals))):
            j = int(np.argmax(per))
            raise ValidationError(f"curve {k} is not T-periodic at t={_fmt(ts[j])}")
        if cv.has_rate:
            h = RATE_STEP
            fd = (cv(ts + h) - cv(ts - h)) / (2 * h)
            err = np.abs(fd - cv.rate(ts))
            if np.any(err > RATE_TOL):
                j = int(np.argmax(err))
                raise ValidationError(f"curve {k} rate is not its derivative at t={_fmt(ts[j])}")
        elif np.ptp(vals) > 0:
            raise ValidationError(f"curve {k} moves but has no closed-form rate")
    for k in range(len(curves) - 1):
        gap, t0 = _curve_gap_min(curves[k], curves[k + 1], T, ts)
        if gap <= 0:
            raise ValidationError(
                f"curves {k} and {k + 1} are not strictly ordered at t={_fmt(t0)}"
            )

    if ann.labels is None:
        return
    labels = ann.labels
    if len(labels) != len(curves) - 1:
        raise ValidationError(
            f"{len(labels)} labels need {len(labels) + 1} curves, got {len(curves)}"
        )
    if np.any(curves[0](ts) != 0.0) or np.any(curves[-1](ts) != 1.0):
        raise ValidationError("labelled curve lists must start at 0 and end at 1")
    fractions = np.array([0.25, 0.5, 0.75])
    for i, lab in enumerate(labels):
        lo = curves[i](ts)
        hi = curves[i + 1](ts)
        xs = lo[None, :] + fractions[:, None] * (hi - lo)[None, :]
        tt = np.broadcast_to(ts[None, :], xs.shape)
        d = c.dxm(xs, tt)
        if lab is Label.POS:
            bad = d <= EPS_SIGN
        elif lab is Label.NEG:
            bad = d >= -EPS_SIGN
        else:
            bad = np.abs(d) > EPS_SIGN
        if bad.any():
            j = np.argwhere(bad)[0]
            raise ValidationError(
                f"dxm sign contradicts label {lab.value} of interval {i} "
                f"at x={_fmt(xs[tuple(j)])}, t={_fmt(tt[tuple(j)])}"
            )
