"""``krc`` command-line front end.

Exit codes: 0 success, 1 a mathematical certificate failed (duality gap,
untight cost, violated bound), 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dependence import beta, best_mp_bound, mp_bound, tau_c, tau_c_dual
from .errors import InputError, MathError
from .measures import CostMatrix, check_cost_tight, lipschitz_check, path_closure
from .param import glue, param_dual, param_primal
from .problem import Problem, load_problem
from .reconstruct import (
    disintegrate_kernel,
    inverse_cdf_sample,
    markov_tau_decay,
    reconstruct_law,
    verify_independence,
)
from .transport import GAP_TOL, MARGIN_TOL, solve

EXIT_OK, EXIT_MATH, EXIT_INPUT = 0, 1, 2
CERT_TOL = 1e-9


def _listify(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, dict):
        return {k: _listify(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_listify(v) for v in x]
    return x


def _cost(prob: Problem, args) -> CostMatrix:
    C = prob.cost
    if getattr(args, "closure", False) and not C.tight:
        print("warning: cost replaced by its shortest-path closure", file=sys.stderr)
        C = path_closure(C)
    return C


def _transport_certificates(mu, nu, C, pi, f) -> dict:
    """Recompute gap, margins and Lipschitz status from the raw plan and potential."""
    primal = float(np.sum(C.c * pi))
    dual = float(mu.mass @ f - nu.mass @ f)
    return {
        "primal_value": primal,
        "dual_value": dual,
        "duality_gap": primal - dual,
        "row_margin_residual": float(np.max(np.abs(pi.sum(axis=1) - mu.mass))),
        "col_margin_residual": float(np.max(np.abs(pi.sum(axis=0) - nu.mass))),
        "potential_lipschitz": lipschitz_check(f, C),
    }


def _transport_ok(cert: dict) -> bool:
    return (
        abs(cert["duality_gap"]) <= GAP_TOL
        and cert["row_margin_residual"] <= MARGIN_TOL
        and cert["col_margin_residual"] <= MARGIN_TOL
        and cert["potential_lipschitz"]
    )


def cmd_validate(prob: Problem, args) -> tuple[dict, int]:
    tight, ((i, j), gap) = check_cost_tight(prob.cost)
    labels = prob.space.labels
    res = {
        "tight": tight,
        "worst_pair": [labels[i], labels[j]],
        "worst_gap": gap,
        "n_points": prob.space.n,
        "measures": sorted(prob.measures),
        "families": sorted(prob.families),
        "joints": sorted(prob.joints),
        "chains": sorted(prob.chains),
    }
    return res, EXIT_OK if tight else EXIT_MATH


def cmd_ot(prob: Problem, args) -> tuple[dict, int]:
    C = _cost(prob, args)
    if args.mu in prob.families or args.nu in prob.families:
        return _param_ot(prob, C, args)
    mu, nu = prob.measure(args.mu), prob.measure(args.nu)
    r = solve(mu, nu, C)
    cert = _transport_certificates(mu, nu, C, r.plan.pi, r.potential.f)
    res = {"mu": args.mu, "nu": args.nu, "value": r.primal_value, "certificates": cert,
           "plan": r.plan.pi}
    if args.dual:
        res["potential"] = r.potential.f
    return res, EXIT_OK if _transport_ok(cert) else EXIT_MATH


def _param_ot(prob: Problem, C: CostMatrix, args) -> tuple[dict, int]:
    mu_fam, nu_fam = prob.family(args.mu), prob.family(args.nu)
    pp = param_primal(mu_fam, nu_fam, C)
    integrand, dual = param_dual(mu_fam, nu_fam, C)
    lam = glue(pp, mu_fam.weights)
    glued = float(np.einsum("wij,ij->", lam, C.c))
    dual_again = integrand.value(mu_fam, nu_fam)
    cert = {
        "total": pp.total,
        "glued_cost": glued,
        "dual_value": dual_again,
        "duality_gap": glued - dual_again,
        "x_margin_residual": float(np.max(np.abs(lam.sum(axis=2) - mu_fam.weights.mass[:, None] * mu_fam.matrix()))),
        "y_margin_residual": float(np.max(np.abs(lam.sum(axis=1) - nu_fam.weights.mass[:, None] * nu_fam.matrix()))),
        "integrand_lipschitz": integrand.is_lipschitz(C),
    }
    ok = (
        abs(cert["duality_gap"]) <= GAP_TOL
        and abs(cert["total"] - glued) <= GAP_TOL
        and cert["x_margin_residual"] <= MARGIN_TOL
        and cert["y_margin_residual"] <= MARGIN_TOL
        and cert["integrand_lipschitz"]
    )
    res = {"mu": args.mu, "nu": args.nu, "omega": list(mu_fam.omega.labels), "G": pp.G,
           "value": pp.total, "certificates": cert}
    if args.dual:
        res["integrand"] = integrand.f
    return res, EXIT_OK if ok else EXIT_MATH


def cmd_tau(prob: Problem, args) -> tuple[dict, int]:
    C = _cost(prob, args)
    joint = prob.joint(args.joint)
    tau = tau_c(joint, C)
    dual = tau_c_dual(joint, C)
    res = {"tau_c": tau, "tau_c_dual": dual, "certificates": {"primal_dual_gap": tau - dual}}
    ok = abs(tau - dual) <= GAP_TOL
    if args.beta:
        b = beta(joint)
        tau_discrete = tau_c(joint, CostMatrix.discrete(joint.s))
        res["beta"] = b
        res["certificates"]["beta_vs_discrete_tau"] = tau_discrete - b
        ok = ok and abs(tau_discrete - b) <= 1e-12
    if args.bound is not None or args.best_x0:
        mp = best_mp_bound(joint, C) if args.best_x0 else mp_bound(joint, C, args.bound)
        res["mp_bound"] = {
            "x0": joint.s.labels[mp.x0],
            "beta": mp.beta,
            "quantile_integral": mp.quantile_integral,
            "bound": mp.bound,
            "bounded_cost_bound": mp.bounded_cost_bound,
            "holds": mp.holds,
            "bounded_holds": mp.bounded_holds,
        }
        ok = ok and mp.holds and mp.bounded_holds
    return res, EXIT_OK if ok else EXIT_MATH


def cmd_reconstruct(prob: Problem, args) -> tuple[dict, int]:
    C = _cost(prob, args)
    joint = prob.joint(args.joint)
    t = reconstruct_law(joint, C)
    tau = tau_c(joint, C)
    cost = t.xy_cost(C)
    cert = {
        "independence_deviation": verify_independence(t),
        "marginal_recovery": float(np.max(np.abs(t.mx_law() - joint.table))),
        "x_star_law_deviation": float(np.max(np.abs(t.my_law().sum(axis=0) - joint.table.sum(axis=0)))),
        "cost_minus_tau": cost - tau,
    }
    ok = all(abs(v) <= CERT_TOL for v in cert.values())
    res = {"tau_c": tau, "expected_cost": cost, "certificates": cert}
    if args.tensor:
        Path(args.tensor).write_text(json.dumps(t.to_json()))
        res["tensor_path"] = args.tensor
    if args.sample:
        batch = inverse_cdf_sample(disintegrate_kernel(t), joint, args.seed, args.sample)
        res["sample"] = {"n": len(batch), "seed": args.seed, "empirical_cost": batch.mean_cost(C)}
        if args.csv:
            Path(args.csv).write_text(batch.to_csv())
            res["sample"]["csv_path"] = args.csv
    return res, EXIT_OK if ok else EXIT_MATH


def cmd_chain(prob: Problem, args) -> tuple[dict, int]:
    C = _cost(prob, args)
    P, init = prob.chain(args.chain)
    d = markov_tau_decay(P, init, C, args.steps)
    bounded = d.tau <= 2.0 * float(C.c.max()) * d.beta + CERT_TOL
    envelope = d.beta <= d.envelope() + CERT_TOL
    res = {
        "steps": args.steps,
        "tau": d.tau,
        "beta": d.beta,
        "fitted_rate": d.rate,
        "contraction": d.contraction,
        "certificates": {"tau_le_2Mbeta": bool(bounded.all()), "beta_within_envelope": bool(envelope.all())},
    }
    return res, EXIT_OK if bounded.all() and envelope.all() else EXIT_MATH


COMMANDS = {
    "validate": cmd_validate,
    "ot": cmd_ot,
    "tau": cmd_tau,
    "reconstruct": cmd_reconstruct,
    "chain": cmd_chain,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="JSON problem file")
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--closure", action="store_true",
                        help="replace an untight cost by its shortest-path closure")

    parser = argparse.ArgumentParser(prog="krc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"krc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check the cost and every named object")

    p = sub.add_parser("ot", parents=[common], help="optimal transport between two measures or families")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--dual", action="store_true", help="include the dual potential")

    p = sub.add_parser("tau", parents=[common], help="dependence coefficients of a joint law")
    p.add_argument("--joint")
    p.add_argument("--beta", action="store_true", help="also report the beta-mixing coefficient")
    p.add_argument("--bound", metavar="X0", help="quantile bound with reference point X0")
    p.add_argument("--best-x0", action="store_true", help="quantile bound minimized over X0")

    p = sub.add_parser("reconstruct", parents=[common], help="coupling with an independent copy")
    p.add_argument("--joint")
    p.add_argument("--sample", type=int, default=0, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", metavar="PATH", help="write sampled triples here")
    p.add_argument("--tensor", metavar="PATH", help="write the triple law as JSON here")

    p = sub.add_parser("chain", parents=[common], help="dependence decay of a Markov chain")
    p.add_argument("--chain")
    p.add_argument("--steps", type=int, required=True, metavar="K")
    return parser


def _format(value, indent: str = "  ") -> str:
    if isinstance(value, list) and value and isinstance(value[0], list):
        rows = [" ".join(f"{x:.6g}" if isinstance(x, float) else str(x) for x in r) for r in value]
        return "\n" + "\n".join(indent + "  " + r for r in rows)
    if isinstance(value, list):
        return " ".join(f"{x:.6g}" if isinstance(x, float) else str(x) for x in value)
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_text(report: dict) -> str:
    lines = [f"{report['command']}  (sha256 {report['inputs_digest'][:12]})"]

    def walk(d, depth):
        for k, v in d.items():
            pad = "  " * depth
            if isinstance(v, dict):
                lines.append(f"{pad}{k}:")
                walk(v, depth + 1)
            else:
                lines.append(f"{pad}{k}: {_format(v, pad)}")

    walk(report["results"], 1)
    lines.append(f"  status: {report['status']}")
    return "\n".join(lines)


def run(argv=None) -> tuple[dict | None, int]:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        prob = load_problem(args.file)
        results, code = COMMANDS[args.command](prob, args)
    except InputError as exc:
        print(f"krc: input error: {exc}", file=sys.stderr)
        return None, EXIT_INPUT
    except MathError as exc:
        print(f"krc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return None, EXIT_MATH
    report = {
        "command": " ".join(["krc", *(argv if argv is not None else sys.argv[1:])]),
        "inputs_digest": prob.digest,
        "results": _listify(results),
        "status": "ok" if code == EXIT_OK else "failed",
        "wall_time": time.perf_counter() - start,
    }
    print(json.dumps(report, indent=2) if args.json else render_text(report))
    return report, code


def main(argv=None) -> int:
    return run(argv)[1]


if __name__ == "__main__":
    sys.exit(main())
