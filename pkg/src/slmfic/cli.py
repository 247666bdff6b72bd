"""Command-line interface: fit, fic, safic, simulate, moran."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .diagnostics import aic, morans_i
from .errors import (
    BandwidthError,
    ConvergenceError,
    DegenerateVarianceError,
    SingularFactorizationError,
    SingularInformationError,
    SlmficError,
    StencilError,
)
from .focus import FocusSpec
from .io import config_from_json, load_dataset, run_report_to_json, write_report
from .simulate import fic_table, monte_carlo, safic_table
from .slm import fit_mle
from .submodels import SubmodelId

_NUMERICAL_ERRORS = (
    ConvergenceError,
    SingularInformationError,
    SingularFactorizationError,
    DegenerateVarianceError,
    StencilError,
    BandwidthError,
)

_FOCUS_BY_FLAG = {
    "mean": "conditional_mean",
    "maxvar": "max_eigen",
    "beta": "beta_coeffs",
    "spill": "spillover",
}


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="CSV table with a header row")
    p.add_argument("--weights", required=True, help="dense n x n CSV or i,j,w edge list")
    p.add_argument("--response", required=True, help="name of the response column")
    p.add_argument("--columns", help="comma-separated covariate columns (default: all others)")
    p.add_argument("--row-normalize", action="store_true")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="slmfic",
        description="Spatial lag model fitting and focused variable selection",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="maximum-likelihood fit of one submodel")
    _add_data_args(p_fit)
    p_fit.add_argument("--subset", help="comma-separated covariate names to include (default: all)")

    p_fic = sub.add_parser("fic", help="rank all submodels by the focused criterion")
    _add_data_args(p_fic)
    p_fic.add_argument("--focus", choices=tuple(_FOCUS_BY_FLAG), default="mean")
    p_fic.add_argument("--location", type=int, default=0, help="unit index for --focus mean")

    p_saf = sub.add_parser("safic", help="rank all submodels by the spatially averaged criterion")
    _add_data_args(p_saf)
    p_saf.add_argument("--scheme", choices=("uniform", "kernel"), default="uniform")
    p_saf.add_argument("--z0", help="comma-separated kernel center (default: row of --location)")
    p_saf.add_argument("--location", type=int, default=0)
    p_saf.add_argument("--bandwidth", type=float)

    p_sim = sub.add_parser("simulate", help="seeded Monte-Carlo experiment")
    p_sim.add_argument("--config", required=True, help="JSON file mirroring SimConfig")
    p_sim.add_argument("--reps", type=int, help="override replication count")
    p_sim.add_argument("--seed", type=int, help="override RNG seed")
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--out", help="output file (default: stdout)")

    p_mor = sub.add_parser("moran", help="Moran's I test of the response column")
    _add_data_args(p_mor)
    return ap


def _dataset_from_args(args):
    columns = args.columns.split(",") if args.columns else None
    return load_dataset(
        args.data,
        args.weights,
        response=args.response,
        columns=columns,
        row_normalize=args.row_normalize,
    )


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_fit(args) -> int:
    data = _dataset_from_args(args)
    if args.subset:
        wanted = args.subset.split(",")
        missing = [c for c in wanted if c not in data.names]
        if missing:
            raise SlmficError(f"unknown covariates in --subset: {missing}")
        S = SubmodelId.from_indices([data.names.index(c) for c in wanted], data.p)
    else:
        S = SubmodelId.wide(data.p)
    fit = fit_mle(data, S)
    payload = {
        "submodel": S.label(),
        "variables": list(S.variable_names(data.names)),
        "rho": fit.theta_hat.rho,
        "sigma2": fit.theta_hat.sigma2,
        "beta": dict(zip(S.variable_names(data.names), fit.theta_hat.beta.tolist())),
        "loglik": fit.loglik,
        "aic": aic(fit),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "warnings": list(fit.warnings),
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_fic(args) -> int:
    data = _dataset_from_args(args)
    kind = _FOCUS_BY_FLAG[args.focus]
    spec = FocusSpec(kind, location=args.location if kind == "conditional_mean" else None)
    rows = fic_table(spec, data)
    _emit(write_report(rows, None, fmt=args.format), args.out)
    return 0


def _cmd_safic(args) -> int:
    data = _dataset_from_args(args)
    z0 = None
    if args.scheme == "kernel":
        if args.z0:
            z0 = [float(v) for v in args.z0.split(",")]
        else:
            z0 = data.X[args.location]
    rows = safic_table(data, scheme=args.scheme, z0=z0, bandwidth=args.bandwidth)
    _emit(write_report(rows, None, fmt=args.format), args.out)
    return 0


def _cmd_simulate(args) -> int:
    cfg = config_from_json(args.config)
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    report = monte_carlo(cfg, jobs=args.jobs)
    _emit(run_report_to_json(report), args.out)
    return 0


def _cmd_moran(args) -> int:
    data = _dataset_from_args(args)
    res = morans_i(data.Y, data.W)
    payload = {
        "I": res.I,
        "expected": res.expected,
        "z": res.z,
        "p_value": res.p_value,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "fic": _cmd_fic,
    "safic": _cmd_safic,
    "simulate": _cmd_simulate,
    "moran": _cmd_moran,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (SlmficError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
