"""Command line front end: ``swallowtail-qbd <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import io
import csv
import sys
from typing import List, Optional

import numpy as np

from . import recurrence as rec
from . import serialize
from .quadrature import build_quadrature
from .recurrence import OperatorKind, build_operator, delta_ratio_identity, sigma
from .simulation import ChainState, run_replications, urn_exact_probabilities
from .special import DomainError, ModelParameters, ParameterError, PoleError, normalizing_constant
from .spectral import km_report, km_report_csv
from .stochastic import (build_P, check_tilde_combination, classify_recurrence, classify_region,
                         continuous_time_feasibility, divergence_probe, invariance_residual,
                         invariant_measure, minimal_margin, probe_trend, validate_stochastic)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

# flags that never change results and are left out of the echoed header
_SILENT = {"out", "threads", "func", "command"}


class VerificationFailure(Exception):
    """A check ran to completion and did not hold; the report is still written."""

    def __init__(self, text: str):
        super().__init__("verification failed")
        self.text = text


def _params(args, need_tau: bool = False) -> ModelParameters:
    beta = args.alpha if getattr(args, "beta", None) is None else args.beta
    tau = getattr(args, "tau", None)
    if need_tau and tau is None:
        raise DomainError("this subcommand needs --tau")
    return ModelParameters(args.alpha, beta, args.gamma, tau)


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _SILENT}


def _json(args, result) -> str:
    return serialize.document(args.command, _echo(args), result)


def _csv(args, body: str) -> str:
    return serialize.csv_header(args.command, _echo(args)) + body


# --------------------------------------------------------------------------
# subcommands


def cmd_coeffs(args) -> str:
    p = _params(args)
    families = [args.family] if args.family else list(rec.U_FAMILIES + rec.V_FAMILIES)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "n", "k", "value"])
        for f in families:
            for n, k, v in rec.coefficient_grid(f, args.levels, p):
                w.writerow([f, n, k, serialize.format_float(float(v))])
        return _csv(args, buf.getvalue())
    res = {f: [[n, k, float(v)] for n, k, v in rec.coefficient_grid(f, args.levels, p)]
           for f in families}
    return _json(args, res)


def cmd_build(args) -> str:
    p = _params(args, need_tau=args.kind == "P")
    return _json(args, build_operator(OperatorKind(args.kind), args.levels, p).to_dict())


def cmd_check_stochastic(args) -> str:
    p = _params(args)
    if args.tilde:
        viol = check_tilde_combination(p, args.tau, args.levels)
        res = {"model": "tau*J1~ + J2~", "violations": [v.to_dict() for v in viol]}
    else:
        p = _params(args, need_tau=True)
        P = build_P(p, args.levels)
        viol = validate_stochastic(P)
        margin, where = minimal_margin(P)
        res = {"model": "(1-tau)*J1 + tau*J2", "region": classify_region(p).to_dict(),
               "violations": [v.to_dict() for v in viol],
               "minimal_margin": margin, "minimal_margin_at": where}
    text = _json(args, res)
    if args.expect_stochastic and viol:
        raise VerificationFailure(text)
    return text


def cmd_tau_bounds(args) -> str:
    return _json(args, classify_region(_params(args)).to_dict())


def cmd_km_verify(args) -> str:
    p = _params(args, need_tau=True)
    rows = km_report(p, args.max_level, args.max_steps, args.levels)
    worst = max(r["abs_diff"] for r in rows)
    if args.format == "csv":
        text = _csv(args, km_report_csv(rows))
    else:
        text = _json(args, {"max_abs_diff": worst, "tolerance": args.tol, "rows": rows})
    if worst > args.tol:
        raise VerificationFailure(text)
    return text


def cmd_invariant(args) -> str:
    p = _params(args)
    pi = invariant_measure(p, args.levels)
    states = [f"{n},{k}" for n in range(args.levels + 1) for k in range(n + 1)]
    res = {"states": states, "pi": pi}
    if p.tau is not None:
        res["max_relative_residual"] = invariance_residual(p, args.levels)
    return _json(args, res)


def cmd_classify(args) -> str:
    p = _params(args)
    res = {"recurrence": classify_recurrence(p).value, "alpha_plus_gamma": p.alpha + p.gamma,
           "region": classify_region(p).to_dict(),
           "continuous_time": continuous_time_feasibility(p, args.levels).to_dict()}
    return _json(args, res)


def cmd_probe(args) -> str:
    p = _params(args, need_tau=True)
    seq = divergence_probe(p, args.refinements, order=args.quad_order)
    radii = [0.1 * 10.0 ** (-j) for j in range(args.refinements)]
    res = {"radii": radii, "partial_integrals": seq,
           "recurrence": classify_recurrence(p).value}
    if args.refinements >= 3:
        res["trend"] = probe_trend(seq).to_dict()
    return _json(args, res)


def _replications(args, mode: str, p: ModelParameters) -> str:
    start = ChainState.parse(args.state)
    r = run_replications(start, args.steps, args.reps, mode, p, args.seed, args.threads)
    if args.format == "csv":
        return _csv(args, r.trajectory_csv())
    res = {"transitions": r.frequency_table(), "occupancy": r.occupancy_table()}
    if mode == "urn" and args.steps == 1:
        exact = urn_exact_probabilities(start, p)
        res["exact"] = {f"{start.key()}->{s.key()}": float(v) for s, v in sorted(exact.items())}
    return _json(args, res)


def cmd_simulate(args) -> str:
    return _replications(args, "chain", _params(args, need_tau=True))


def cmd_urn(args) -> str:
    return _replications(args, "urn", ModelParameters(args.alpha, args.alpha, args.gamma))


def selftest_checks() -> List[tuple]:
    """(name, passed, detail) for a small cross-module suite."""
    zero = ModelParameters(0, 0, 0)
    checks = []
    area = build_quadrature(24, zero, normalized=False).weights.sum()
    checks.append(("area of region = 1/6", abs(area - 1 / 6) < 1e-12, float(area)))
    mass = build_quadrature(24, ModelParameters(0.3, -0.4, 0.7)).weights.sum()
    checks.append(("weight integrates to 1", abs(mass - 1) < 1e-9, float(mass)))
    checks.append(("C(0,0,0) = 1/6", abs(normalizing_constant(zero) - 1 / 6) < 1e-15,
                   float(normalizing_constant(zero))))
    checks.append(("sigma_{0,0} = 1", sigma(0, 0, zero) == 1, float(sigma(0, 0, zero))))
    d = delta_ratio_identity(3, 1, zero)
    checks.append(("delta-ratio sum = 4", abs(d - 4) < 1e-12, float(d)))
    rs = max(np.abs(L.row_sums() - 1).max()
             for L in build_operator("J2", 6, ModelParameters(0.5, 1, -0.5)).levels)
    checks.append(("J2 row sums = 1", rs < 1e-12, float(rs)))
    tm = classify_region(ModelParameters(1, 0, 0)).tau_max
    checks.append(("region B bound = 3/5", abs(tm - 0.6) < 1e-15, tm))
    pi = invariant_measure(zero, 1)
    checks.append(("pi starts 1, 10, 14", np.allclose(pi, [1, 10, 14], rtol=1e-14), pi.tolist()))
    ex = urn_exact_probabilities(ChainState(1, 0), zero)
    checks.append(("urn stay probability 1/2", ex[ChainState(1, 0)] == 0.5,
                   float(ex[ChainState(1, 0)])))
    ct = continuous_time_feasibility(zero, 4)
    checks.append(("no continuous-time generator", not ct.feasible, ct.witness))
    return checks


def cmd_selftest(args) -> str:
    checks = selftest_checks()
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})" for name, ok, detail in checks]
    text = "\n".join(lines) + "\n"
    if not all(ok for _, ok, _ in checks):
        raise VerificationFailure(text)
    return text


# --------------------------------------------------------------------------
# parser


def _add_params(sp, tau: bool = True, beta: bool = True):
    sp.add_argument("--alpha", type=float, required=True)
    if beta:
        sp.add_argument("--beta", type=float, default=None, help="defaults to alpha")
    sp.add_argument("--gamma", type=float, required=True)
    if tau:
        sp.add_argument("--tau", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swallowtail-qbd", description=__doc__)
    ap.add_argument("--out", help="write the report to this file instead of stdout")
    ap.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("coeffs", help="recurrence coefficients on an (n, k) grid")
    _add_params(sp, tau=False)
    sp.add_argument("--levels", type=int, default=5)
    sp.add_argument("--family", choices=rec.U_FAMILIES + rec.V_FAMILIES)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("build", help="export a truncated block operator")
    _add_params(sp)
    sp.add_argument("--kind", choices=[k.value for k in OperatorKind], default="P")
    sp.add_argument("--levels", type=int, default=5)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("check-stochastic", help="entrywise sign conditions of P")
    _add_params(sp)
    sp.add_argument("--levels", type=int, default=15)
    sp.add_argument("--tilde", action="store_true",
                    help="check tau*J1~ + J2~ (model normalized at (0,1)) instead")
    sp.add_argument("--expect-stochastic", action="store_true",
                    help="exit 1 if any violation is found")
    sp.set_defaults(func=cmd_check_stochastic)

    sp = sub.add_parser("tau-bounds", help="parameter region and largest admissible tau")
    _add_params(sp, tau=False)
    sp.set_defaults(func=cmd_tau_bounds)

    sp = sub.add_parser("km-verify", help="spectral formula against truncated matrix powers")
    _add_params(sp)
    sp.add_argument("--max-level", type=int, default=3)
    sp.add_argument("--max-steps", type=int, default=4)
    sp.add_argument("--levels", type=int, default=12)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_km_verify)

    sp = sub.add_parser("invariant", help="invariant measure")
    _add_params(sp)
    sp.add_argument("--levels", type=int, default=15)
    sp.set_defaults(func=cmd_invariant)

    sp = sub.add_parser("classify", help="recurrence class and continuous-time check")
    _add_params(sp)
    sp.add_argument("--levels", type=int, default=8)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("probe-divergence", help="corner-excluded recurrence integrals")
    _add_params(sp)
    sp.add_argument("--refinements", type=int, default=4)
    sp.add_argument("--quad-order", type=int, default=40)
    sp.set_defaults(func=cmd_probe)

    for name, func, helptext in (("simulate", cmd_simulate, "Monte Carlo runs of the chain"),
                                 ("urn", cmd_urn, "Monte Carlo runs of the urn procedure")):
        sp = sub.add_parser(name, help=helptext)
        if name == "urn":
            _add_params(sp, tau=False, beta=False)
        else:
            _add_params(sp)
        sp.add_argument("--state", default="0,0")
        sp.add_argument("--steps", type=int, default=1)
        sp.add_argument("--reps", type=int, default=1000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "csv"), default="json",
                        help="csv writes the first trajectory")
        sp.set_defaults(func=func)

    sp = sub.add_parser("selftest", help="quick cross-module sanity suite")
    sp.set_defaults(func=cmd_selftest)
    return ap


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if hasattr(args, "beta") and args.beta is None:
        args.beta = args.alpha
    try:
        text = args.func(args)
    except VerificationFailure as vf:
        _emit(vf.text, args.out)
        return EXIT_FAIL
    except (ParameterError, DomainError, PoleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
