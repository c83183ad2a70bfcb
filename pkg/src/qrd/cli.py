"""``qrd`` command line tool.

Exit codes: 0 success, 1 failed invariant suite or figure ordering check,
2 bad input, 3 infeasible distortion, 4 optimizer did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .checks import SUITES, run_suite
from .config import get_tolerances
from .eaopt import InfeasibleDistortion, OptimizerOptions
from .io import channel_from_json, channel_to_json, dump_json, load_json, observable_from_json, state_from_json
from .measures import bell_mixture, eof_search, eof_two_qubit, eop_ladder
from .qstate import PureState, _as_density
from .ratefuncs import (
    CL_SEARCH,
    RateCurve,
    cl_isotropic_closed_form,
    cl_rate_single_letter,
    convex_hull,
    ea_isotropic_closed_form,
    ea_qsi_rate_optimize,
    ea_rate_optimize,
    sample_curve,
    write_curve_csv,
)
from .regions import qrst_qsi_feedback, qrst_qsi_nonfeedback_Ip, qsr_region, tradeoff_region
from .search import SearchConfig

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


class NotConverged(Exception):
    pass


def _provenance(args) -> dict:
    return {
        "invocation": ["qrd"] + list(args.argv),
        "seed": args.seed,
        "version": __version__,
        "tolerances": asdict(get_tolerances()),
    }


def _load(path, parser, what):
    if path is None:
        raise InputError(f"--{what} is required")
    try:
        return parser(load_json(path))
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise InputError(f"cannot parse {what} file {path}: {exc}") from None


def _emit(payload: dict, args):
    text = dump_json(payload, args.out)
    if args.out is None:
        print(text)


def _grid(args) -> list[float]:
    if args.steps < 2:
        raise InputError("--steps must be at least 2")
    if not 0 <= args.dmin < args.dmax <= 1:
        raise InputError("need 0 <= --dmin < --dmax <= 1")
    return [float(x) for x in np.linspace(args.dmin, args.dmax, args.steps)]


def _search_cfg(args, base: SearchConfig = SearchConfig()) -> SearchConfig:
    return SearchConfig(ensemble_size=base.ensemble_size, restarts=args.restarts or base.restarts,
                        max_iters=base.max_iters, step_tolerance=base.step_tolerance, seed=args.seed)


# ---------------------------------------------------------------------------


def cmd_optimize(args):
    obs = _load(args.delta, observable_from_json, "delta")
    opts = OptimizerOptions(gap_tolerance=args.gap_tol)
    if args.D is None:
        raise InputError("--D is required")
    if args.qsi:
        rho = _as_density(_load(args.state or args.source, state_from_json, "state"))
        res = ea_qsi_rate_optimize(rho, obs, args.D, opts)
    else:
        rho = _as_density(_load(args.source, state_from_json, "source"))
        res = ea_rate_optimize(rho, obs, args.D, opts)
    payload = {
        "rate": float(res.rate), "lower_bound": float(res.lower_bound), "gap": float(res.gap),
        "lambda": float(res.lam), "distortion": float(res.distortion), "iterations": int(res.iterations),
        "kkt_residual": float(res.kkt_residual), "converged": bool(res.converged), "channel": channel_to_json(res.channel), "provenance": _provenance(args),
    }
    payload["provenance"]["iterations"] = res.iterations
    _emit(payload, args)
    if not res.converged:
        raise NotConverged(f"duality gap {res.gap:.3g} above {args.gap_tol}")


def cmd_curve(args):
    grid = _grid(args)
    kind = args.kind
    if kind in ("ea-closed", "cl-closed"):
        fn = ea_isotropic_closed_form if kind == "ea-closed" else cl_isotropic_closed_form
        curve = sample_curve(fn, grid, "closed_form", threads=1)
    else:
        rho = _as_density(_load(args.source, state_from_json, "source"))
        obs = _load(args.delta, observable_from_json, "delta")
        if kind == "ea":
            opts = OptimizerOptions(gap_tolerance=args.gap_tol)

            def fn(D):
                res = ea_rate_optimize(rho, obs, D, opts)
                if not res.converged:
                    raise NotConverged(f"gap {res.gap:.3g} at D={D}")
                return res.rate

            curve = sample_curve(fn, grid, "optimized")
        else:
            cfg = _search_cfg(args, CL_SEARCH)
            curve = sample_curve(lambda D: cl_rate_single_letter(rho, obs, D, cfg), grid, "upper_bound")
    if args.convex:
        curve = convex_hull(curve)
    write_curve_csv(curve, args.out or sys.stdout, _header_lines(args))


def _header_lines(args):
    p = _provenance(args)
    return [f"invocation: {' '.join(p['invocation'])}", f"seed: {p['seed']}", f"version: {p['version']}"]


def cmd_region(args):
    if args.kind == "qsr":
        psi = _load(args.state, state_from_json, "state")
        if not isinstance(psi, PureState):
            raise InputError("state redistribution needs a pure state (\"vector\")")
        parts = [[int(x) for x in g.split(",") if x] for g in args.partition.split(";")]
        try:
            reg = qsr_region(psi, parts)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        payload = reg.to_json()
        payload["ebit_gain"] = reg.extras["ebit_gain"]
    else:
        rho = _as_density(_load(args.source or args.state, state_from_json, "source"))
        ch = _load(args.channel, channel_from_json, "channel")
        try:
            if args.kind == "tradeoff":
                payload = tradeoff_region(rho, ch).to_json()
            elif args.kind == "feedback":
                payload = {"Q": qrst_qsi_feedback(rho, ch, args.E)}
            else:
                payload = {"Ip_trivial_split": qrst_qsi_nonfeedback_Ip(rho, ch)}
        except ValueError as exc:
            raise InputError(str(exc)) from None
    payload["provenance"] = _provenance(args)
    _emit(payload, args)


def cmd_eof(args):
    rho = _as_density(_load(args.state, state_from_json, "state"))
    payload = {}
    if rho.dims == (2, 2):
        payload["eof"] = eof_two_qubit(rho)
        payload["method"] = "concurrence"
    if args.search or rho.dims != (2, 2):
        payload["eof_search_upper"] = eof_search(rho, _search_cfg(args))
    payload["provenance"] = _provenance(args)
    _emit(payload, args)


def cmd_eop(args):
    rho = _as_density(_load(args.state, state_from_json, "state"))
    try:
        ladder = eop_ladder(rho, args.dprime, _search_cfg(args))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    payload = {"eop_upper": ladder[-1], "ladder": ladder, "provenance": _provenance(args)}
    _emit(payload, args)


def cmd_check(args):
    report = run_suite(args.suite, seed=args.seed)
    if report is not None:
        print(json.dumps({"suite": args.suite, "failure": report}, indent=2))
        return EXIT_FAIL
    print(json.dumps({"suite": args.suite, "status": "ok"}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def rd_compare_rows(grid, cfg: SearchConfig, d_eprime: int = 2):
    """Rows ``(D, cl_lower, ea_lower, eop_upper)`` for the isotropic qubit source.

    The EoP curve is evaluated on Bell mixtures below ``D = 3/4``, pinned to
    zero from there on and replaced by its lower convex envelope.
    """
    grid = sorted(set(float(g) for g in grid))
    pts = []
    for D in grid:
        if D >= 0.75:
            pts.append((D, 0.0, "closed_form"))
        else:
            pts.append((D, eop_ladder(bell_mixture(D), d_eprime, cfg)[-1], "upper_bound"))
    if grid[-1] < 0.75:
        pts.append((0.75, 0.0, "closed_form"))
    hull = convex_hull(RateCurve(tuple(pts)))
    eop = dict(zip(hull.distortions, hull.rates))
    return [(D, cl_isotropic_closed_form(D), ea_isotropic_closed_form(D), eop[D]) for D in grid]


def cmd_figure(args):
    grid = _grid(args)
    cfg = _search_cfg(args, SearchConfig(restarts=1, step_tolerance=1e-4))
    rows = rd_compare_rows(grid, cfg)
    bad = [(D, cl, ea, up) for D, cl, ea, up in rows if up < max(cl, ea) - 5e-3]
    if bad:
        print(json.dumps({"error": "eop upper bound below a lower bound", "rows": bad}), file=sys.stderr)
        return EXIT_FAIL
    if args.out is None:
        _write_figure(rows, sys.stdout, args)
    else:
        with open(args.out, "w", newline="") as fh:
            _write_figure(rows, fh, args)
    return EXIT_OK


def _write_figure(rows, fh, args):
    for line in _header_lines(args):
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["D", "cl_lower", "ea_lower", "eop_upper"])
    for row in rows:
        w.writerow([f"{x:.9g}" for x in row])


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrd", description="Quantum rate-distortion numerics.")
    p.add_argument("--version", action="version", version=f"qrd {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--restarts", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--gap-tol", type=float, default=1e-4)
        return sp

    def grid(sp):
        sp.add_argument("--dmin", type=float, default=0.0)
        sp.add_argument("--dmax", type=float, default=0.75)
        sp.add_argument("--steps", type=int, default=16)

    sp = common(sub.add_parser("optimize", help="entanglement-assisted rate at one distortion"))
    sp.add_argument("--source")
    sp.add_argument("--state", help="bipartite source (d_A, d_B) for --qsi")
    sp.add_argument("--delta")
    sp.add_argument("--D", type=float)
    sp.add_argument("--qsi", action="store_true", help="condition on quantum side information")

    sp = common(sub.add_parser("curve", help="sample a rate-distortion curve to CSV"))
    sp.add_argument("--kind", choices=["ea", "cl", "ea-closed", "cl-closed"], default="ea")
    sp.add_argument("--source")
    sp.add_argument("--delta")
    sp.add_argument("--convex", action="store_true")
    grid(sp)

    sp = common(sub.add_parser("region", help="rate regions and side-information rates"))
    sp.add_argument("kind", choices=["qsr", "tradeoff", "feedback", "nonfeedback"])
    sp.add_argument("--state")
    sp.add_argument("--source")
    sp.add_argument("--channel")
    sp.add_argument("--partition", default="0;1;2;3", help="A;B;C;R subsystem groups, e.g. '0;1;2;3'")
    sp.add_argument("--E", type=float, default=0.0)

    sp = common(sub.add_parser("eof", help="entanglement of formation"))
    sp.add_argument("--state")
    sp.add_argument("--search", action="store_true", help="also run the decomposition search")

    sp = common(sub.add_parser("eop", help="entanglement of purification upper bound"))
    sp.add_argument("--state")
    sp.add_argument("--dprime", type=int, default=2)

    sp = common(sub.add_parser("check", help="run an invariant suite"))
    sp.add_argument("suite", choices=sorted(SUITES))

    sp = common(sub.add_parser("figure", help="bounds on the unassisted rate for the isotropic qubit"))
    grid(sp)
    return p


COMMANDS = {
    "optimize": cmd_optimize, "curve": cmd_curve, "region": cmd_region, "eof": cmd_eof,
    "eop": cmd_eop, "check": cmd_check, "figure": cmd_figure,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        code = COMMANDS[args.verb](args)
    except InputError as exc:
        print(f"qrd: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleDistortion as exc:
        print(f"qrd: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NotConverged as exc:
        print(f"qrd: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except ValueError as exc:
        print(f"qrd: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
