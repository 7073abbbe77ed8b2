"""Command-line interface.

Subcommands::

    relmod describe <spec>
    relmod fit <spec> [--data FILE] [--json] [--precision N] [--max-iter N] [--tol X]
    relmod mixed <spec> --delta FILE [--precision N]

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from .fitting import FitError, FitOptions, fit, subset_sums
from .io import CountsError, SpecError, load_counts, load_model_spec, load_positive_vector, spec_to_model
from .models import (
    RelationalModel,
    classify,
    degrees_of_freedom,
    generalized_odds_ratios,
    is_homogeneous,
    odds_ratio_text,
)
from .stats import goodness_of_fit, mixed_parameters
from .tables import cell_id

_EXIT_OK = 0
_EXIT_INPUT = 1
_EXIT_NUMERIC = 2


def _fmt(value: float, precision: int) -> str:
    return f"{value:.{precision}f}"


def _describe_lines(model: RelationalModel, precision: int) -> list[str]:
    cls = classify(model)
    df = degrees_of_freedom(model)
    order = model.nparams if "order J-1" not in cls.kind.value else model.nparams - 1
    lines = [
        f"cells ({model.ncells}): " + " ".join(cell_id(c) for c in model.table.cells),
        f"variant: {model.variant.value}",
        f"effects (J): {model.nparams}   rank: {model.nparams}   degrees of freedom: {df}",
        f"family: {'curved' if 'curved' in cls.kind.value else 'regular'} exponential family of order {order}",
        f"overall effect: {'yes' if cls.overall_effect else 'no'}",
    ]
    if model.saturated:
        lines.append("saturated model: no testable constraints")
        return lines
    lines.append("kernel basis:")
    for row in model.kernel.rows:
        lines.append("  [" + " ".join(str(x) for x in row) + "]")
    lines.append("odds ratios:")
    for ratio in generalized_odds_ratios(model):
        tag = "homogeneous" if is_homogeneous(ratio) else "non-homogeneous"
        lines.append(f"  {odds_ratio_text(ratio, model.table)}   [{tag}]")
    return lines


def _cmd_describe(args) -> int:
    model = spec_to_model(load_model_spec(args.spec))
    print("\n".join(_describe_lines(model, args.precision)))
    return _EXIT_OK


def _fit_payload(model, obs, result) -> dict:
    df = degrees_of_freedom(model)
    gof = goodness_of_fit(obs.array(), result.delta_hat, df)
    T = subset_sums(model, obs)
    return {
        "variant": model.variant.value,
        "cells": [cell_id(c) for c in model.table.cells],
        "observed": list(map(float, obs.y)),
        "fitted": [float(x) for x in result.delta_hat],
        "beta": {name: float(b) for name, b in zip(model.matrix.row_names, result.beta_hat)},
        "alpha": None if result.alpha is None else float(result.alpha),
        "subset_sums": {
            "names": list(model.matrix.row_names),
            "observed": [float(x) for x in T],
            "fitted": [float(x) for x in result.fitted_sums],
        },
        "proportionality": float(result.proportionality),
        "degrees_of_freedom": df,
        "statistics": {
            "x2": gof.x2,
            "g2": gof.g2,
            "p_value_x2": gof.p_value_x2,
            "p_value_g2": gof.p_value_g2,
        },
        "convergence": {
            "converged": result.converged,
            "iterations": result.iterations,
            "max_residual": result.max_residual,
        },
    }


def _cmd_fit(args) -> int:
    spec = load_model_spec(args.spec)
    model = spec_to_model(spec)
    if args.data is not None:
        obs = load_counts(args.data, model.table)
    elif spec.data is not None:
        obs = load_counts(spec.data, model.table)
    else:
        raise CountsError("no counts given: pass --data FILE or put 'data' in the spec")
    options = FitOptions(tol_abs=args.tol, tol_rel=args.tol, max_iter=args.max_iter)
    result = fit(model, obs, options)
    payload = _fit_payload(model, obs, result)

    if args.json:
        print(json.dumps(payload, indent=2))
        return _EXIT_OK

    p = args.precision
    lines = [
        f"fit: converged in {result.iterations} iterations"
        f" (max residual {result.max_residual:.2e})",
        "",
        "cell        observed        fitted",
    ]
    for cid, o, f_ in zip(payload["cells"], payload["observed"], payload["fitted"]):
        lines.append(f"{cid:<12}{_fmt(o, p):>12}  {_fmt(f_, p):>12}")
    lines += ["", "subset sums:", "effect        observed        fitted       ratio"]
    ss = payload["subset_sums"]
    for name, o, f_ in zip(ss["names"], ss["observed"], ss["fitted"]):
        lines.append(f"{name:<12}{_fmt(o, p):>12}  {_fmt(f_, p):>12}  {_fmt(f_ / o, p):>10}")
    lines.append(f"proportionality: {_fmt(payload['proportionality'], p)}")
    lines.append("")
    lines.append("log-linear parameters:")
    for name, b in payload["beta"].items():
        lines.append(f"  {name} = {_fmt(b, p)}")
    if payload["alpha"] is not None:
        lines.append(f"alpha (multinomial multiplier): {_fmt(payload['alpha'], p)}")
    s = payload["statistics"]
    lines.append(
        f"goodness of fit: X2 = {_fmt(s['x2'], p)}, G2 = {_fmt(s['g2'], p)}, "
        f"df = {payload['degrees_of_freedom']}, "
        f"p(X2) = {_fmt(s['p_value_x2'], p)}, p(G2) = {_fmt(s['p_value_g2'], p)}"
    )
    print("\n".join(lines))
    return _EXIT_OK


def _cmd_mixed(args) -> int:
    spec = load_model_spec(args.spec)
    model = spec_to_model(spec)
    if model.saturated:
        raise SpecError("saturated model: the mixed parameterization needs df > 0")
    delta = load_positive_vector(args.delta, model.table)
    params = mixed_parameters(delta.array(), model.matrix, model.kernel)
    p = args.precision
    lines = ["mean-value parameters (A delta):"]
    for name, z in zip(model.matrix.row_names, params.zeta1):
        lines.append(f"  {name} = {_fmt(z, p)}")
    lines.append("canonical parameters theta:")
    for i, t in enumerate(params.theta, start=1):
        lines.append(f"  theta{i} = {_fmt(t, p)}")
    lines.append("log odds ratios (D log delta):")
    for i, z in enumerate(params.zeta2_tilde, start=1):
        lines.append(f"  k{i} = {_fmt(z, p)}")
    print("\n".join(lines))
    return _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relmod",
        description="Specify, analyze, and fit multiplicative models for contingency tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    describe = sub.add_parser("describe", help="model structure, class, and odds ratios")
    describe.add_argument("spec", help="model spec file (YAML)")
    describe.add_argument("--precision", type=int, default=4)
    describe.set_defaults(handler=_cmd_describe)

    fit_p = sub.add_parser("fit", help="maximum-likelihood fit and goodness of fit")
    fit_p.add_argument("spec", help="model spec file (YAML)")
    fit_p.add_argument("--data", help="counts file (cell,count per line)")
    fit_p.add_argument("--json", action="store_true", help="machine-readable report")
    fit_p.add_argument("--precision", type=int, default=4)
    fit_p.add_argument("--max-iter", type=int, default=200)
    fit_p.add_argument("--tol", type=float, default=1e-10)
    fit_p.set_defaults(handler=_cmd_fit)

    mixed = sub.add_parser("mixed", help="mixed parameterization of a positive vector")
    mixed.add_argument("spec", help="model spec file (YAML)")
    mixed.add_argument("--delta", required=True, help="positive cell values (cell,count per line)")
    mixed.add_argument("--precision", type=int, default=4)
    mixed.set_defaults(handler=_cmd_mixed)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except (SpecError, CountsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
