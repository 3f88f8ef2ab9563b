"""
Built-in benchmark scenarios.

Every entry is stored in the file format of :mod:`advlimit.scenario` and
carries the limit it is expected to approach as ``alpha`` grows.  Drift
profiles with plateaus are built by :func:`profile`, which glues one
polynomial per interval:

    dxm = s_i * amp * ((x - a)/w)^p * ((b - x)/w)^q     on (a, b),

with ``s_i = -1, 0, +1`` for labels A, B, C, exponent 1 at an A|C junction
(a simple zero), 2 next to a plateau (a double zero) and 0 at a domain end.
With equal widths on both sides of every A|C junction the result is C^1, so
``m`` (its exact antiderivative) is C^2.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .scenario import scenario_from_dict

S = "sin(2*pi*t/T)"
C = "cos(2*pi*t/T)"


def _num(v):
    return repr(float(v))


def _poly_expr(p, var):
    terms = []
    for k, c in enumerate(p.coef):
        if c == 0.0:
            continue
        mono = "" if k == 0 else (f"*{var}" if k == 1 else f"*{var}**{k}")
        terms.append(f"({_num(c)}){mono}")
    return "+".join(terms) if terms else "0.0"


def profile(labels, breaks, amp=1.0, var="x"):
    """``(m, dxm)`` expression strings for a labelled piecewise-polynomial drift.

    ``breaks`` are the interval ends ``0 = k_0 < ... < k_{N+1} = 1`` and
    ``var`` the spatial variable (e.g. a translated ``x``).  Each piece is
    written in its local variable ``u = (x - a)/w`` to keep coefficients O(1).
    """
    labels = [lab.upper() for lab in labels]
    sign = {"A": -1.0, "B": 0.0, "C": 1.0}
    n = len(labels)
    assert len(breaks) == n + 1

    def order(j):
        if j < 0 or j >= n:
            return 0
        return 2 if labels[j] == "B" else 1

    m_args, d_args = [], []
    offset = 0.0
    for i, lab in enumerate(labels):
        a, b = breaks[i], breaks[i + 1]
        w = b - a
        u = Polynomial([0.0, 1.0])
        p = sign[lab] * amp * u ** order(i - 1) * (1 - u) ** order(i + 1)
        P = w * p.integ()  # dm/du = w dm/dx
        loc = f"(({var}-{_num(a)})/{_num(w)})"
        mi = f"{_num(offset)}+{_poly_expr(P, loc)}"
        di = _poly_expr(p, loc)
        offset += float(P(1.0))
        if i < n - 1:
            cond = f"{var} < {_num(b)}"
            m_args += [cond, mi]
            d_args += [cond, di]
        else:
            m_args.append(mi)
            d_args.append(di)

    def glue(args):
        return f"piecewise({', '.join(args)})" if len(args) > 1 else args[0]

    return glue(m_args), glue(d_args)


def _static_curves(breaks):
    return [{"expr": _num(b)} for b in breaks]


def _plateau(name, description, labels, breaks, V, amp, extra_m2=None, moving=None):
    """Static (or rigidly translated) plateau scenario with spatial expectation."""
    var = "x"
    curves = _static_curves(breaks)
    if moving is not None:
        shift, rate = moving
        var = f"(x-({shift}))"
        curves = [curves[0]] + [
            {"expr": f"{_num(b)}+{shift}", "rate": rate} for b in breaks[1:-1]
        ] + [curves[-1]]
    m, dxm = profile(labels, breaks, amp, var)
    if extra_m2 is not None:
        m = f"({m})*({extra_m2})"
        dxm = f"({dxm})*({extra_m2})"
    return {
        "name": name,
        "description": description,
        "T": 1.0,
        "labels": list(labels),
        "expressions": {"m": m, "dxm": dxm, "V": V},
        "curves": curves,
        "expected_limit": {"kind": "spatial"},
    }


def _cubic_two_maxima(k1, k2, k3, K):
    e1 = f"({k1}+{k2}+{k3})"
    e2 = f"({k1}*{k2}+{k1}*{k3}+{k2}*{k3})"
    e3 = f"({k1}*{k2}*{k3})"
    m = f"-{K}*(x**4/4-{e1}*x**3/3+{e2}*x**2/2-{e3}*x)"
    dxm = f"-{K}*(x-{k1})*(x-{k2})*(x-{k3})"
    return m, dxm


STAIRCASE_LABELS = ["A", "C", "B", "C", "A", "B", "A", "B", "C", "B"]

# Drift amplitudes of the plateau profiles.  Near a plateau edge the drift
# only grows quadratically, so the plateau ends sharpen like
# (alpha * amp)^(-1/3) and large amplitudes are needed at moderate alpha.
PLATEAU_AMP = 400.0
STAIRCASE_AMP = 400.0


def _definitions():
    defs = []

    defs.append({
        "name": "constant-potential",
        "description": "V = 0.7 with a monotone time-varying drift; every alpha gives 0.7.",
        "T": 1.0,
        "labels": ["C"],
        "expressions": {"m": f"x*(1.5+{S})", "dxm": f"1.5+{S}", "b": f"1.5+{S}", "V": "0.7"},
        "curves": _static_curves([0.0, 1.0]),
        "expected_limit": {"kind": "nondegenerate", "value": 0.7},
    })
    defs.append({
        "name": "time-only-potential",
        "description": "V depends on t alone, so lambda equals its time average for all alpha.",
        "T": 1.0,
        "labels": ["C", "A"],
        "expressions": {"m": "sin(pi*x)", "dxm": "pi*cos(pi*x)", "V": f"0.3+{S}"},
        "curves": _static_curves([0.0, 0.5, 1.0]),
        "expected_limit": {"kind": "nondegenerate", "value": 0.3},
    })
    defs.append({
        "name": "monotone-increasing-potential",
        "description": "dxm > 0 everywhere; the limit is the average of V(1, t). "
                       "V increases in x, so lambda(alpha) rises towards it.",
        "T": 1.0,
        "labels": ["C"],
        "expressions": {"m": f"x*(1.5+{S})", "dxm": f"1.5+{S}", "V": f"x*(1+0.5*{C})"},
        "curves": _static_curves([0.0, 1.0]),
        "expected_limit": {"kind": "nondegenerate", "value": 1.0},
    })
    defs.append({
        "name": "monotone-decreasing-potential",
        "description": "dxm > 0 everywhere and V decreasing in x; lambda(alpha) falls "
                       "towards the average of V(1, t) = 0.",
        "T": 1.0,
        "labels": ["C"],
        "expressions": {"m": f"x*(1.5+{S})", "dxm": f"1.5+{S}", "V": f"(1-x)*(1+0.5*{C})"},
        "curves": _static_curves([0.0, 1.0]),
        "expected_limit": {"kind": "nondegenerate", "value": 0.0},
    })
    defs.append({
        "name": "monotone-negative-drift",
        "description": "dxm < 0 everywhere; the limit is the average of V(0, t).",
        "T": 1.0,
        "labels": ["A"],
        "expressions": {"m": f"-x*(1.5+{S})", "dxm": f"-(1.5+{S})",
                        "V": f"cos(pi*x)+0.5*x*{S}"},
        "curves": _static_curves([0.0, 1.0]),
        "expected_limit": {"kind": "nondegenerate", "value": 1.0},
    })

    k1 = f"(0.2+0.05*{S})"
    k2 = "0.5"
    k3 = f"(0.8+0.05*{C})"
    m, dxm = _cubic_two_maxima(k1, k2, k3, 40)
    defs.append({
        "name": "two-maxima",
        "description": "dxm = -40 (x-k1)(x-k2)(x-k3) with moving k1, k3: spatial maxima "
                       "along k1 and k3, the limit is the smaller V-average.",
        "T": 1.0,
        "labels": ["C", "A", "C", "A"],
        "expressions": {"m": m, "dxm": dxm, "V": f"x+0.3*{S}"},
        "curves": [{"expr": "0"}, {"expr": k1, "rate": f"0.1*pi/T*{C}"}, {"expr": k2},
                   {"expr": k3, "rate": f"-0.1*pi/T*{S}"}, {"expr": "1"}],
        "expected_limit": {"kind": "nondegenerate"},
    })

    k = f"(0.5+0.25*{S})"
    defs.append({
        "name": "moving-maximum",
        "description": "Single interior maximum of m along k(t) = 0.5 + 0.25 sin(2 pi t).",
        "T": 1.0,
        "labels": ["C", "A"],
        "expressions": {"m": f"-5*(x-{k})**2", "dxm": f"-10*(x-{k})", "V": "cos(2*pi*x)"},
        "curves": [{"expr": "0"}, {"expr": k, "rate": f"0.5*pi/T*{C}"}, {"expr": "1"}],
        "expected_limit": {"kind": "nondegenerate"},
    })
    k = f"(0.5+0.2*{S})"
    defs.append({
        "name": "interior-minimum",
        "description": "m has an interior minimum along k(t); both ends are maxima and "
                       "the limit is the smaller of the end averages.",
        "T": 1.0,
        "labels": ["A", "C"],
        "expressions": {"m": f"5*(x-{k})**2", "dxm": f"10*(x-{k})",
                        "V": f"0.6*x+0.4*(1-x)*(1+{C})+0.2*{S}"},
        "curves": [{"expr": "0"}, {"expr": k, "rate": f"0.4*pi/T*{C}"}, {"expr": "1"}],
        "expected_limit": {"kind": "nondegenerate"},
    })
    defs.append({
        "name": "strip-center",
        "description": "Static maximum at x = 0.25 with V = cos(2 pi x); the limit is "
                       "cos(pi/2) = 0, also reached by shrinking Neumann strips around 0.25.",
        "T": 1.0,
        "labels": ["C", "A"],
        "expressions": {"m": "-5*(x-0.25)**2*(1+0.5*" + S + ")",
                        "dxm": "-10*(x-0.25)*(1+0.5*" + S + ")", "V": "cos(2*pi*x)"},
        "curves": _static_curves([0.0, 0.25, 1.0]),
        "expected_limit": {"kind": "nondegenerate", "value": 0.0},
    })

    vplat = f"sin(2*pi*x)+0.5*x*{C}"
    defs.append(_plateau(
        "plateau-nn", "C|B|A: m is flat on its maximum plateau, which moves rigidly; "
        "the limit is the Neumann eigenvalue on the plateau.",
        ["C", "B", "A"], [0.0, 0.35, 0.65, 1.0], vplat, PLATEAU_AMP,
        moving=(f"0.1*{S}", f"0.2*pi/T*{C}")))
    defs.append(_plateau(
        "plateau-dd", "A|B|C: the plateau is a minimum level of m; Dirichlet eigenvalue "
        "on the plateau against the two end averages.",
        ["A", "B", "C"], [0.0, 0.3, 0.7, 1.0], f"4*x*(1-x)+0.3*x+{S}", PLATEAU_AMP))
    defs.append(_plateau(
        "plateau-nd", "C|B|C: Neumann end on the left, Dirichlet end on the right, "
        "against the right-end average.",
        ["C", "B", "C"], [0.0, 0.3, 0.7, 1.0], f"25*(1-x)**2+2*{S}", PLATEAU_AMP))
    defs.append(_plateau(
        "plateau-dn", "A|B|A: Dirichlet end on the left, Neumann end on the right, "
        "against the left-end average.",
        ["A", "B", "A"], [0.0, 0.3, 0.7, 1.0], f"25*x**2+2*{S}", PLATEAU_AMP))
    defs.append(_plateau(
        "end-plateau-left", "B|A: plateau touching x = 0 followed by decreasing m; "
        "Neumann eigenvalue on (0, k1).",
        ["B", "A"], [0.0, 0.4, 1.0], vplat, PLATEAU_AMP))
    defs.append(_plateau(
        "end-plateau-right", "C|B: increasing m then a plateau touching x = 1; "
        "Neumann eigenvalue on (k1, 1).",
        ["C", "B"], [0.0, 0.6, 1.0], f"sin(2*pi*(1-x))+0.5*(1-x)*{C}", PLATEAU_AMP))
    defs.append(_plateau(
        "end-plateau-left-nd", "B|C: plateau at x = 0 drained to the right; "
        "mixed eigenvalue on (0, k1) against the average of V(1, t).",
        ["B", "C"], [0.0, 0.5, 1.0], f"6*x+{S}", PLATEAU_AMP))

    m, dxm = profile(STAIRCASE_LABELS, [i / 10 for i in range(11)], STAIRCASE_AMP)
    defs.append({
        "name": "staircase",
        "description": "Ten intervals labelled A C B C A B A B C B with dxm = m1'(x) m2(t), "
                       "m2 = 1 + 0.5 sin(2 pi t); every plateau type and both "
                       "kinds of maximum curve appear.",
        "T": 1.0,
        "labels": STAIRCASE_LABELS,
        "expressions": {"m": f"({m})*(1+0.5*{S})", "dxm": f"({dxm})*(1+0.5*{S})",
                        "V": f"-sin(pi*x/2)+0.5*x*{S}"},
        "curves": _static_curves([i / 10 for i in range(11)]),
        "expected_limit": {"kind": "spatial"},
    })

    def temporal(name, description, b, V, hint=None, value=None):
        d = {
            "name": name, "description": description, "T": 1.0,
            "expressions": {"m": f"x*({b})", "dxm": b, "b": b, "V": V},
            "expected_limit": {"kind": "temporal"},
        }
        if hint is not None:
            d["partition_hint"] = hint
        if value is not None:
            d["expected_limit"]["value"] = value
        return d

    defs.append(temporal(
        "temporal-rest-then-right",
        "b = 0 on [0, 1/2] and b > 0 after: heat flow, then collapse to x = 1.",
        f"max(0, -{S})", f"cos(pi*x)+0.5*{S}"))
    defs.append(temporal(
        "temporal-right-then-left",
        "b = sin(2 pi t), V = x: right end on the first half, left end on the second; "
        "the limit is 1/2.",
        S, "x", value=0.5))
    defs.append(temporal(
        "temporal-left-then-right",
        "b = -sin(2 pi t): left end first, then the right end.",
        f"-{S}", f"x+0.5*{C}"))
    defs.append(temporal(
        "temporal-isolated-zero",
        "b = 1 - cos(2 pi (t - 0.3)) >= 0 vanishes only at t = 0.3; the isolated zero "
        "does not matter and the limit is the average of V(1, t).",
        "1-cos(2*pi*(t/T-0.3))", f"x**2+{S}"))

    tstar = 0.5
    m2 = f"piecewise(t % T < {tstar}*T, sin(pi*(t % T)/({tstar}*T))**2, 0)"
    m1, m1p = profile(["C", "B", "A"], [0.0, 0.35, 0.65, 1.0], 20.0)
    defs.append({
        "name": "mixed-strip",
        "description": "Drift m1'(x) m2(t) with a plateau of m1 on [0.35, 0.65] and m2 = 0 "
                       "on [T/2, T]: strip problem until T/2, full problem after.",
        "T": 1.0,
        "expressions": {"m": f"({m1})*({m2})", "dxm": f"({m1p})*({m2})",
                        "V": f"sin(2*pi*x)+0.5*{C}"},
        "expected_limit": {"kind": "mixed", "kappa1": 0.35, "kappa2": 0.65, "t_star": tstar},
    })
    defs.append({
        "name": "mixed-tent",
        "description": "Drift -(x - 0.4) m2(t) with m2 = 0 on [T/2, T]: values collapse "
                       "to x = 0.4 until T/2, full problem after.",
        "T": 1.0,
        "expressions": {"m": f"-5*(x-0.4)**2*({m2})", "dxm": f"-10*(x-0.4)*({m2})",
                        "V": f"sin(2*pi*x)+0.5*{C}"},
        "expected_limit": {"kind": "mixed", "kappa1": 0.4, "kappa2": 0.4, "t_star": tstar},
    })
    return defs


@lru_cache(maxsize=None)
def _catalog():
    return tuple(scenario_from_dict(d, probe=65) for d in _definitions())


def builtin_catalog():
    """All built-in scenarios, validated on a 65 x 65 probe grid."""
    return list(_catalog())


def catalog_names():
    return [d["name"] for d in _definitions()]


def get(name):
    for sc in _catalog():
        if sc.name == name:
            return sc
    raise KeyError(f"no catalog scenario named {name!r}")
