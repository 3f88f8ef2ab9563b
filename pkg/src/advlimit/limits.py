"""
Predicted large-advection limits for spatially structured drifts.

The critical curves ``0 = k_0 < k_1 < ... < k_{N+1} = 1`` split the domain into
intervals labelled A (``dxm < 0``), B (``dxm = 0``) or C (``dxm > 0``).  The
limit is the smallest of

* the averages of ``V`` along the curves where ``m`` has a spatial maximum
  (a C interval followed by an A interval, or a domain end next to A/C), and
* drift-free eigenvalues on each plateau (B interval), with a Neumann end
  where the neighbouring drift pushes mass into the plateau and a Dirichlet
  end where it pulls mass away.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import AdvLimitError, HypothesisViolation
from .scenario import Label
from .subdomain import MovingInterval, subdomain_eigenvalue

A, B, C = Label.NEG, Label.ZERO, Label.POS

# Boundary letters of a plateau keyed by (left neighbour, right neighbour);
# None stands for a domain end.  A lone plateau has no drift at all and
# reduces to the Neumann problem on the whole domain.
PLATEAU_TABLE = {
    (C, A): ("N", "N"),
    (None, A): ("N", "N"),
    (C, None): ("N", "N"),
    (None, None): ("N", "N"),
    (C, C): ("N", "D"),
    (None, C): ("N", "D"),
    (A, A): ("D", "N"),
    (A, None): ("D", "N"),
    (A, C): ("D", "D"),
}


def curve_average(V, kappa, period, quad_n=256):
    """``(1/T) * integral_0^T V(kappa(s), s) ds`` by composite Simpson."""
    if quad_n < 8 or quad_n % 2:
        raise ValueError("quad_n must be even and at least 8")
    s = np.linspace(0.0, period, quad_n + 1)
    vals = V(kappa(s), s)
    return float(simpson(vals, x=s)) / period


@dataclass(frozen=True)
class CriticalStructure:
    labels: tuple
    A: frozenset
    B: frozenset
    C: frozenset
    E: frozenset
    E_NN: frozenset
    E_ND: frozenset
    E_DN: frozenset
    E_DD: frozenset

    @property
    def N(self):
        return len(self.labels) - 1

    def plateau_sets(self):
        return {("N", "N"): self.E_NN, ("N", "D"): self.E_ND,
                ("D", "N"): self.E_DN, ("D", "D"): self.E_DD}


def classify_labels(labels):
    """A/B/C index sets and the E-sets for interval labels ``0..N``."""
    labels = tuple(labels)
    if not labels:
        raise HypothesisViolation("no intervals")
    n = len(labels) - 1
    for i in range(n):
        if labels[i] is labels[i + 1]:
            raise HypothesisViolation(
                f"adjacent intervals {i} and {i + 1} share label {labels[i].value}"
            )
    sets = {lab: frozenset(i for i, x in enumerate(labels) if x is lab) for lab in (A, B, C)}

    E = set()
    if labels[0] is A:
        E.add(0)
    for i in range(1, n + 1):
        if labels[i - 1] is C and labels[i] is A:
            E.add(i)
    if labels[n] is C:
        E.add(n + 1)

    plateaus = {key: set() for key in (("N", "N"), ("N", "D"), ("D", "N"), ("D", "D"))}
    for i in sets[B]:
        left = labels[i - 1] if i > 0 else None
        right = labels[i + 1] if i < n else None
        plateaus[PLATEAU_TABLE[(left, right)]].add(i)

    return CriticalStructure(labels, sets[A], sets[B], sets[C], frozenset(E),
                             frozenset(plateaus[("N", "N")]), frozenset(plateaus[("N", "D")]),
                             frozenset(plateaus[("D", "N")]), frozenset(plateaus[("D", "D")]))


def classify(scenario):
    ann = scenario.annotation
    if ann is None or ann.labels is None:
        raise HypothesisViolation(f"scenario {scenario.name!r} has no labelled intervals")
    return classify_labels(ann.labels)


@dataclass(frozen=True)
class Candidate:
    source: str
    value: float


@dataclass
class LimitPrediction:
    candidates: list
    failures: list = field(default_factory=list)

    def __post_init__(self):
        if not self.candidates:
            raise AdvLimitError("no limit candidate could be evaluated")

    @property
    def minimum(self):
        return min(c.value for c in self.candidates)

    @property
    def argmin(self):
        return min(self.candidates, key=lambda c: c.value).source

    @property
    def sources(self):
        return [c.source for c in self.candidates]

    def to_dict(self):
        out = {
            "candidates": [{"source": c.source, "value": c.value} for c in self.candidates],
            "minimum": self.minimum,
            "argmin": self.argmin,
        }
        if self.failures:
            out["failures"] = [{"source": s, "error": e} for s, e in self.failures]
        return out

    def to_json(self):
        return dumps_json(self.to_dict())


def dumps_json(obj):
    """Deterministic JSON with 17 significant digits for floats."""
    return json.dumps(_round17(obj), indent=2, sort_keys=False)


def _round17(obj):
    if isinstance(obj, float):
        return float(format(obj, ".17g")) if np.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    return obj


def _curve_value(ann, i, V, period, quad_n):
    return curve_average(V, ann.curves[i], period, quad_n)


def maximum_curves(scenario):
    """Indices of the curves along which ``m`` attains a spatial maximum."""
    ann = scenario.annotation
    if ann is None:
        raise HypothesisViolation(f"scenario {scenario.name!r} has no curve annotation")
    if ann.labels is None:
        return list(range(len(ann.curves)))
    cs = classify_labels(ann.labels)
    if cs.B:
        raise HypothesisViolation("plateau intervals present; use the spatial prediction")
    return sorted(cs.E)


def predict_limit_nondegenerate(scenario, quad_n=256):
    """Minimum of the ``V``-averages along the spatial maximum curves of ``m``.

    Without labels every annotated curve is taken as a maximum curve.
    """
    ann = scenario.annotation
    c = scenario.coefficients
    cands = [Candidate(f"CurveAverage({i})", _curve_value(ann, i, c.V, c.period, quad_n))
             for i in maximum_curves(scenario)]
    return LimitPrediction(cands)


def predict_limit_spatial(scenario, grid, quad_n=256, tol=1e-10, jobs=1):
    """Curve averages over E plus plateau eigenvalues, with provenance.

    Plateau eigenvalues that fail to converge are left out of the minimum and
    listed in ``failures``.
    """
    cs = classify(scenario)
    ann = scenario.annotation
    c = scenario.coefficients
    cands = [Candidate(f"CurveAverage({i})", _curve_value(ann, i, c.V, c.period, quad_n))
             for i in sorted(cs.E)]
    jobs_list = []
    for (p, q), idx in cs.plateau_sets().items():
        for i in sorted(idx):
            jobs_list.append((i, p, q))
    jobs_list.sort()

    def run(job):
        i, p, q = job
        interval = MovingInterval(ann.curves[i], ann.curves[i + 1])
        return subdomain_eigenvalue(c, interval, p, q, grid, tol=tol).lam

    failures = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run, j) for j in jobs_list]
            outcomes = []
            for f in futures:
                try:
                    outcomes.append(f.result())
                except AdvLimitError as exc:
                    outcomes.append(exc)
    else:
        outcomes = []
        for j in jobs_list:
            try:
                outcomes.append(run(j))
            except AdvLimitError as exc:
                outcomes.append(exc)
    for (i, p, q), out in zip(jobs_list, outcomes):
        source = f"Subdomain({i},{p},{q})"
        if isinstance(out, Exception):
            failures.append((source, str(out)))
        else:
            cands.append(Candidate(source, out))
    return LimitPrediction(cands, failures)
