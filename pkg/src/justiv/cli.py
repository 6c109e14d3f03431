"""Command-line interface: ``justiv <subcommand> [flags]``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 partial
numerical failure. Output is CSV (default) or JSON, written to ``--out`` or
stdout, with floats printed to 10 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bias, endogeneity, rejection, verify
from .model import DesignPoint, ParameterError, canonical_model
from .oracle import SimulationPlan, mc_bias_report
from .stats import IntegrationError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return math.nan
        return float(format(v, ".10g"))
    return v


def _csv_cell(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        return format(v, ".10g")
    return str(v)


def render(records, columns, fmt):
    """Serialize records deterministically as CSV or JSON text."""
    rows = [{c: _fmt(r.get(c, math.nan)) for c in columns} for r in records]
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r[c]) for c in columns])
    return buf.getvalue()


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    tmp = f"{out}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, out)


def _workers():
    try:
        return max(1, int(os.environ.get("JUSTIV_WORKERS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    # order of results always follows `items`
    w = _workers()
    if w == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, items))


def _screen(args):
    return 0.0 if args.screened else -math.inf


def _validate_common(args):
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    if hasattr(args, "ef_min"):
        if not 1 <= args.ef_min <= args.ef_max:
            raise UsageError("need 1 <= --ef-min <= --ef-max")
        if args.ef_steps < 1:
            raise UsageError("--ef-steps must be positive")
    if hasattr(args, "rho_max"):
        if not 0 < args.rho_max < 1:
            raise UsageError("--rho-max must lie in (0, 1)")
        if args.rho_steps < 1:
            raise UsageError("--rho-steps must be positive")


def _ef_grid(args):
    return rejection.default_ef_grid(args.ef_min, args.ef_max, args.ef_steps)


def cmd_contour(args):
    _validate_common(args)
    efs = _ef_grid(args)
    rhos = rejection.default_rho_grid(args.rho_max, args.rho_steps)
    cells = [(ef, rho) for ef in efs for rho in rhos]

    def one(cell):
        try:
            q = rejection.RejectionQuery(DesignPoint(float(cell[0]), float(cell[1])), args.alpha, _screen(args))
            return rejection.rejection_rate(q)
        except (IntegrationError, ParameterError):
            return math.nan

    rates = _map(one, cells)
    records = [{"ef": ef, "rho": rho, "rate": r} for (ef, rho), r in zip(cells, rates)]
    records.sort(key=lambda r: (r["ef"], r["rho"]))
    _emit(render(records, ["ef", "rho", "rate"], args.format), args.out)
    return EXIT_PARTIAL if any(math.isnan(r) for r in rates) else EXIT_OK


def cmd_cutoff(args):
    _validate_common(args)
    if args.target < args.alpha:
        raise UsageError("--target must be at least --alpha")
    rho_star = rejection.endogeneity_cutoff(args.target, args.alpha, _screen(args), tol=args.tolerance)
    rec = {
        "target": args.target,
        "alpha": args.alpha,
        "screened": int(args.screened),
        "rho_star": rho_star,
        "tolerance": args.tolerance,
    }
    _emit(render([rec], list(rec), args.format), args.out)
    return EXIT_OK


_BIAS_COLUMNS = [
    "ef",
    "lambda",
    "bound_uncond",
    "bound_cond",
    "cond_is_sup",
    "band_uncond_min",
    "band_uncond_max",
    "band_cond_min",
    "band_cond_max",
]


def cmd_bias(args):
    _validate_common(args)
    efs = _ef_grid(args)
    rho_grid = bias.default_band_rho_grid(args.rho_steps, hi=args.rho_max)
    rows = _map(lambda ef: bias.bias_curve([ef], rho_grid)[0], efs)
    _emit(render(rows, _BIAS_COLUMNS, args.format), args.out)
    failed = any(math.isnan(r[c]) for r in rows for c in _BIAS_COLUMNS)
    return EXIT_PARTIAL if failed else EXIT_OK


_RHO_COLUMNS = [
    "name",
    "ef_hat",
    "cov_rf",
    "rho_hat",
    "rho_ovb",
    "term_ols",
    "term_causal",
    "rho_bound_me",
    "ef_from_r2p",
    "error",
    "notes",
]


def cmd_rho(args):
    if not args.input:
        raise UsageError("rho needs --in FILE (CSV or JSON)")
    try:
        studies = endogeneity.read_studies(args.input)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    rows, n_failed = [], 0
    for i, s in enumerate(studies):
        if isinstance(s, Exception):
            rows.append({"name": f"record {i + 1}", "error": str(s), "notes": ""})
            n_failed += 1
            continue
        try:
            row = endogeneity.calibrate(s)
            row["error"] = ""
        except (endogeneity.CalibrationError, ParameterError) as exc:
            row = {"name": s.name, "error": str(exc), "notes": ""}
            n_failed += 1
        rows.append(row)
    _emit(render(rows, _RHO_COLUMNS, args.format), args.out)
    return EXIT_PARTIAL if rows and n_failed == len(rows) else EXIT_OK


_SIM_COLUMNS = [
    "ef",
    "rho",
    "screen",
    "n_draws",
    "n_kept",
    "n_dropped",
    "rejection_rate",
    "rejection_rate_se",
    "median_scaled_iv",
    "median_scaled_u",
    "mean_scaled_u",
    "mean_scaled_u_se",
    "corr_tar_t1",
]


def cmd_simulate(args):
    _validate_common(args)
    if args.draws < 1:
        raise UsageError("--draws must be positive")
    efs = _ef_grid(args)
    rhos = rejection.default_rho_grid(args.rho_max, args.rho_steps)
    screen = "positive" if args.screened else "none"
    cells = [(float(ef), float(rho)) for ef in efs for rho in rhos]

    def one(cell):
        ef, rho = cell
        plan = SimulationPlan(canonical_model(DesignPoint(ef, rho)), args.draws, args.seed, screen)
        rec = mc_bias_report(plan, args.alpha, workers=1).as_record()
        rec.update(ef=ef, rho=rho, screen=screen)
        return rec

    rows = _map(one, cells)
    _emit(render(rows, _SIM_COLUMNS, args.format), args.out)
    return EXIT_OK


_VERIFY_COLUMNS = ["statistic", "ef", "rho", "exact", "simulated", "se", "margin", "passed"]


def cmd_verify(args):
    _validate_common(args)
    if args.draws < 1:
        raise UsageError("--draws must be positive")
    if not args.tolerance >= 0:
        raise UsageError("--tolerance must be non-negative")
    checks = verify.run_verification(n_draws=args.draws, seed=args.seed, alpha=args.alpha, tolerance=args.tolerance)
    _emit(render([c.as_record() for c in checks], _VERIFY_COLUMNS, args.format), args.out)
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(
            f"FAIL {c.statistic} at ef={c.ef:g} rho={c.rho:g}: margin {c.margin:.2f} s.e.",
            file=sys.stderr,
        )
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="justiv",
        description="Finite-sample rejection rates, bias and endogeneity calibration for just-identified IV.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ef=None, rho=None):
        sp.add_argument("--alpha", type=float, default=0.05, help="nominal test level")
        if ef is not None:
            sp.add_argument("--ef-min", type=float, default=ef[0])
            sp.add_argument("--ef-max", type=float, default=ef[1])
            sp.add_argument("--ef-steps", type=int, default=ef[2])
        if rho is not None:
            sp.add_argument("--rho-max", type=float, default=rho[0])
            sp.add_argument("--rho-steps", type=int, default=rho[1])
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("contour", help="rejection-rate grid over (E[F], rho)")
    common(sp, ef=(1.0, rejection.EF_MAX, 20), rho=(rejection.RHO_CAP, 41))
    sp.add_argument("--screened", action="store_true", help="condition on pi_hat > 0")
    sp.set_defaults(func=cmd_contour)

    sp = sub.add_parser("cutoff", help="largest |rho| keeping worst-case rejection below target")
    common(sp)
    sp.add_argument("--target", type=float, default=0.10)
    sp.add_argument("--screened", action="store_true")
    sp.add_argument("--tolerance", type=float, default=rejection.CUTOFF_TOL)
    sp.set_defaults(func=cmd_cutoff)

    sp = sub.add_parser("bias", help="median-bias bounds and rho-bands over E[F]")
    common(sp, ef=(1.0, 20.0, 20), rho=(0.98, 49))
    sp.set_defaults(func=cmd_bias)

    sp = sub.add_parser("rho", help="calibrate endogeneity from study summaries")
    common(sp)
    sp.add_argument("--in", dest="input", default=None)
    sp.set_defaults(func=cmd_rho)

    sp = sub.add_parser("simulate", help="Monte Carlo reports over an (E[F], rho) grid")
    common(sp, ef=(1.0, 100.0, 5), rho=(0.9, 5))
    sp.add_argument("--screened", action="store_true")
    sp.add_argument("--draws", type=int, default=200_000)
    sp.add_argument("--seed", type=int, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="cross-check quadrature against Monte Carlo")
    common(sp)
    sp.add_argument("--draws", type=int, default=200_000)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--tolerance", type=float, default=3.0, help="allowed discrepancy in standard errors")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"justiv {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
