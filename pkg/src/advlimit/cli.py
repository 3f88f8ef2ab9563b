"""
Command-line front end.

    advlimit solve   SCENARIO --alpha A
    advlimit sweep   SCENARIO --alphas 10,30,100,300 --out table.csv
    advlimit limit   SCENARIO [--mode nondegenerate|spatial|temporal|mixed]
    advlimit verify  SCENARIO | --all-catalog
    advlimit catalog [--out DIR]

``SCENARIO`` is a TOML file or ``catalog:NAME`` for a built-in entry.  JSON goes
to stdout, diagnostics to stderr.

Exit codes: 0 ok, 1 load error, 2 no convergence, 3 partial sweep or missing
limit candidate, 4 hypothesis violation, 5 verification not all PASS.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import catalog
from .discretize import SpaceTimeGrid
from .errors import (AdvLimitError, HypothesisViolation, NoConvergence, ParseError,
                     ValidationError)
from .floquet import (DEFAULT_MAX_ITER, DEFAULT_TOL, GridPolicy, alpha_sweep,
                      build_monodromy, principal_eigenvalue)
from .limits import dumps_json, predict_limit_nondegenerate, predict_limit_spatial
from .scenario import dump_scenario, load_scenario
from .temporal import limit_eigenvalue_temporal, mixed_degenerate_eigenvalue

log = logging.getLogger("advlimit")

EXIT_OK = 0
EXIT_LOAD = 1
EXIT_NO_CONVERGENCE = 2
EXIT_PARTIAL = 3
EXIT_HYPOTHESIS = 4
EXIT_VERIFY = 5

DEFAULT_ALPHAS = (10.0, 30.0, 100.0, 300.0)
DEFAULT_GAP_TOL = 5e-2
# gaps below this are rounding noise and do not break a nonincreasing trend
TREND_FLOOR = 1e-9
LIMIT_NX = 401
LIMIT_NT = 800
MODES = ("nondegenerate", "spatial", "temporal", "mixed", "explicit")


def resolve_scenario(ref):
    """Load a scenario from a path or a ``catalog:NAME`` reference."""
    if ref.startswith("catalog:"):
        name = ref.split(":", 1)[1]
        try:
            return catalog.get(name)
        except KeyError as exc:
            raise ParseError(str(exc.args[0])) from None
    return load_scenario(ref)


def default_mode(scenario):
    if scenario.expected_limit is not None:
        return scenario.expected_limit.kind
    ann = scenario.annotation
    if ann is not None and ann.labels is not None:
        return "spatial"
    if ann is not None:
        return "nondegenerate"
    if scenario.coefficients.b is not None:
        return "temporal"
    raise HypothesisViolation(
        f"scenario {scenario.name!r} has neither curves nor a temporal drift b")


def predict(scenario, mode=None, nx=LIMIT_NX, nt=LIMIT_NT, tol=DEFAULT_TOL, jobs=1):
    """Predicted large-``alpha`` limit as ``(value, payload, complete)``.

    ``payload`` is JSON-ready; ``complete`` is False when some candidate failed.
    """
    mode = mode or default_mode(scenario)
    grid = SpaceTimeGrid(nx, nt, scenario.period)
    if mode == "nondegenerate":
        p = predict_limit_nondegenerate(scenario)
        return p.minimum, p.to_dict(), True
    if mode == "spatial":
        p = predict_limit_spatial(scenario, grid, tol=tol, jobs=jobs)
        return p.minimum, p.to_dict(), not p.failures
    if mode == "temporal":
        if scenario.coefficients.b is None:
            raise HypothesisViolation(f"scenario {scenario.name!r} has no temporal drift b")
        res = limit_eigenvalue_temporal(scenario, grid, tol=tol)
        src = "TemporalLimit"
    elif mode == "mixed":
        lim = scenario.expected_limit
        if lim is None or lim.kind != "mixed":
            raise HypothesisViolation("mixed mode needs kappa1, kappa2 and t_star in expected_limit")
        k = lim.params
        res = mixed_degenerate_eigenvalue(scenario, k["kappa1"], k["kappa2"], k["t_star"],
                                          grid, tol=tol)
        src = f"Mixed({k['kappa1']},{k['kappa2']},{k['t_star']})"
    elif mode == "explicit":
        lim = scenario.expected_limit
        if lim is None or lim.value is None:
            raise HypothesisViolation("explicit mode needs expected_limit.value")
        return lim.value, {"candidates": [{"source": "Explicit", "value": lim.value}],
                           "minimum": lim.value, "argmin": "Explicit"}, True
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return res.lam, {"candidates": [{"source": src, "value": res.lam}],
                     "minimum": res.lam, "argmin": src,
                     "residual": res.residual, "iterations": res.iterations}, True


def expected_value(scenario, **kw):
    """Target of verification: a stated value wins over a computed prediction."""
    value, payload, complete = predict(scenario, **kw)
    lim = scenario.expected_limit
    if lim is not None and lim.value is not None:
        return lim.value, payload, complete
    return value, payload, complete


# ------------------------------------------------------------------ verification

@dataclass
class VerifyReport:
    scenario: str
    prediction: float
    candidates: dict
    rows: list = field(default_factory=list)
    gap_tol: float = DEFAULT_GAP_TOL
    error: str | None = None

    @property
    def gaps(self):
        return [abs(r.lam - self.prediction) for r in self.rows]

    @property
    def final_gap(self):
        g = self.gaps
        return g[-1] if g else math.nan

    @property
    def trend(self):
        g = self.gaps[-3:]
        if any(not math.isfinite(x) for x in g):
            return False
        return all(b <= a + TREND_FLOOR for a, b in zip(g, g[1:]))

    @property
    def status(self):
        if self.error is not None:
            return "FAIL"
        close = math.isfinite(self.final_gap) and self.final_gap <= self.gap_tol
        if close and self.trend:
            return "PASS"
        if close or self.trend:
            return "WARN"
        return "FAIL"

    def to_dict(self):
        out = {
            "scenario": self.scenario,
            "prediction": self.prediction,
            "limit": self.candidates,
            "rows": [{"alpha": r.alpha, "lambda": r.lam, "residual": r.residual,
                      "iterations": r.iterations, "nx": r.nx, "nt": r.nt,
                      "gap": abs(r.lam - self.prediction)} for r in self.rows],
            "final_gap": self.final_gap,
            "trend": self.trend,
            "status": self.status,
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    def summary(self):
        gaps = " ".join(f"{g:.3g}" for g in self.gaps)
        return (f"{self.status:4s} {self.scenario}: prediction {self.prediction:.6g}, "
                f"final gap {self.final_gap:.3g}, gaps [{gaps}]")


def verify_scenario(scenario, alphas=DEFAULT_ALPHAS, gap_tol=DEFAULT_GAP_TOL,
                    policy=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, theta=1.0,
                    jobs=1, seed=0, mode=None):
    """Sweep ``alpha`` and compare with the expected limit."""
    try:
        target, payload, _ = expected_value(scenario, mode=mode, tol=tol)
    except AdvLimitError as exc:
        return VerifyReport(scenario.name, math.nan, {}, [], gap_tol, str(exc))
    table = alpha_sweep(scenario, alphas, policy, tol, max_iter, theta, jobs, seed)
    report = VerifyReport(scenario.name, target, payload, table.rows, gap_tol)
    if not table.complete:
        report.error = "; ".join(r.error for r in table.rows if r.error)
    return report


def _verify_task(args):
    scenario, kw = args
    return verify_scenario(scenario, **kw)


# ------------------------------------------------------------------ commands

def _emit(obj):
    sys.stdout.write(dumps_json(obj) + "\n")


def _policy(args):
    return GridPolicy(nx=args.nx, nt=args.nt)


def _alphas(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("alphas must be a nonempty list of nonnegative numbers")
    return sorted(vals)


def cmd_solve(args):
    sc = resolve_scenario(args.scenario)
    grid = _policy(args).grid(args.alpha, sc.period)
    M = build_monodromy(sc, grid, args.alpha, args.theta, record_trajectory=False)
    try:
        res = principal_eigenvalue(M, args.tol, args.max_iter, seed=args.seed)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit({"error": "no convergence", "residual": exc.last_residual,
               "iterations": exc.max_iter})
        return EXIT_NO_CONVERGENCE
    out = res.to_dict()
    out.update(alpha=args.alpha, nx=grid.nx, nt=grid.nt)
    _emit(out)
    return EXIT_OK


def cmd_sweep(args):
    sc = resolve_scenario(args.scenario)
    table = alpha_sweep(sc, args.alphas, _policy(args), args.tol, args.max_iter, args.theta,
                        args.jobs, args.seed)
    if args.out:
        Path(args.out).write_text(table.to_csv())
    _emit({"scenario": sc.name,
           "rows": [{"alpha": r.alpha, "lambda": r.lam, "residual": r.residual,
                     "iterations": r.iterations, "nx": r.nx, "nt": r.nt,
                     **({"error": r.error} if r.error else {})} for r in table.rows]})
    if not table.complete:
        print("warning: some rows did not converge", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_limit(args):
    sc = resolve_scenario(args.scenario)
    nx = args.nx or LIMIT_NX
    nt = args.nt or LIMIT_NT
    _, payload, complete = predict(sc, args.mode, nx, nt, args.tol, args.jobs)
    _emit(payload)
    if not complete:
        print("warning: some limit candidates failed and were left out", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_verify(args):
    if args.all_catalog:
        scenarios = catalog.builtin_catalog()
    elif args.scenario:
        scenarios = [resolve_scenario(args.scenario)]
    else:
        print("error: give a scenario or --all-catalog", file=sys.stderr)
        return EXIT_LOAD
    kw = dict(alphas=args.alphas, gap_tol=args.gap_tol, policy=_policy(args), tol=args.tol,
              max_iter=args.max_iter, theta=args.theta, seed=args.seed, mode=args.mode)
    if args.jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_verify_task, [(s, kw) for s in scenarios]))
    else:
        reports = [verify_scenario(s, jobs=args.jobs, **kw) for s in scenarios]
    for r in reports:
        print(r.summary(), file=sys.stderr)
    _emit([r.to_dict() for r in reports])
    return EXIT_OK if all(r.status == "PASS" for r in reports) else EXIT_VERIFY


def cmd_catalog(args):
    names = catalog.catalog_names()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for sc in catalog.builtin_catalog():
            dump_scenario(sc, out / f"{sc.name}.toml")
    _emit(names)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="advlimit",
                                description="Principal eigenvalues under large advection.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", nargs="?" if sp.prog.endswith("verify") else None,
                            help="TOML file or catalog:NAME")
        sp.add_argument("--nx", type=int, default=None)
        sp.add_argument("--nt", type=int, default=None)
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
        sp.add_argument("--theta", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("solve", help="principal eigenvalue at one alpha")
    common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="principal eigenvalue over several alphas")
    common(sp)
    sp.add_argument("--alphas", type=_alphas, default=list(DEFAULT_ALPHAS))
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("limit", help="predicted large-alpha limit")
    common(sp)
    sp.add_argument("--mode", choices=MODES, default=None)
    sp.set_defaults(func=cmd_limit)

    sp = sub.add_parser("verify", help="compare sweeps with predicted limits")
    common(sp)
    sp.add_argument("--all-catalog", action="store_true")
    sp.add_argument("--alphas", type=_alphas, default=list(DEFAULT_ALPHAS))
    sp.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
    sp.add_argument("--mode", choices=MODES, default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("catalog", help="list built-in scenarios")
    sp.add_argument("--out", help="directory to write the scenarios as TOML")
    sp.set_defaults(func=cmd_catalog)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except AdvLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
