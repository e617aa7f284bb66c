"""Command-line interface: fit, simulate, influence.

Exit codes: 0 success, 1 input/configuration error, 2 numerical
non-convergence (results are still written).  Identical invocations
produce byte-identical outputs; every report embeds a RunManifest with a
content hash of the resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .asymptotics import SingularJacobianError
from .fitting import FitConfig, fit
from .influence import PATTERN_CAP, influence_table
from .io import ParseError, RunManifest, config_digest, load_responses, write_json_report
from .model import ItemBank
from .objectives import METHODS
from .quadrature import build_gauss_hermite
from .simulation import ScenarioSpec, mechanism_curve, run_study, true_difficulties

__all__ = ["main"]


class UsageError(ValueError):
    pass


def _parse_method_spec(token: str) -> FitConfig:
    """'mmle', 'dpd:0.3', 'gamma:0.5' -> FitConfig."""
    name, _, alpha_txt = token.partition(":")
    name = name.strip().lower()
    if name not in METHODS:
        raise UsageError(f"unknown method {name!r}; expected one of {METHODS}")
    if name == "mmle":
        return FitConfig(method="mmle")
    if not alpha_txt:
        raise UsageError(f"method {name!r} requires an alpha, e.g. {name}:0.3")
    try:
        alpha = float(alpha_txt)
    except ValueError as exc:
        raise UsageError(f"bad alpha {alpha_txt!r} in {token!r}") from exc
    if not 0.0 < alpha <= 1.0:
        raise UsageError(f"alpha must satisfy 0 < alpha <= 1, got {alpha}")
    return FitConfig(method=name, alpha=alpha)


def _fmt6(x: float) -> str:
    return f"{x:.6g}"


def cmd_fit(args) -> int:
    if args.method in ("dpd", "gamma"):
        if args.alpha is None:
            raise UsageError(f"--method {args.method} requires --alpha")
        if not 0.0 < args.alpha <= 1.0:
            raise UsageError(
                f"--alpha must satisfy 0 < alpha <= 1 (got {args.alpha})"
            )
    data = load_responses(args.input)
    config = FitConfig(
        method=args.method,
        alpha=None if args.method == "mmle" else args.alpha,
        n_nodes=args.nodes,
        tol=args.tol,
        max_iter=args.max_iter,
        compute_se=args.se,
    )
    try:
        result = fit(data, config)
    except SingularJacobianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    resolved = {
        "input": str(args.input),
        "method": args.method,
        "alpha": config.alpha,
        "nodes": args.nodes,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "se": bool(args.se),
        "format": args.format,
    }
    manifest = RunManifest(command="fit", config_digest=config_digest(resolved), seed=0)
    results = {
        "difficulties": [float(x) for x in result.difficulties],
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "stationarity_norm": float(result.stationarity_norm),
        "final_objective": float(result.divergence_trace[-1]),
        "warnings": list(result.warnings),
        "clamped_items": list(result.clamped_items),
    }
    if result.standard_errors is not None:
        results["standard_errors"] = [float(x) for x in result.standard_errors]
    if args.out:
        if args.format == "json":
            write_json_report(args.out, manifest, resolved, results)
        else:
            with open(args.out, "w", encoding="utf-8") as fh:
                header = ["item", "difficulty"]
                if result.standard_errors is not None:
                    header.append("se")
                fh.write(",".join(header) + "\n")
                for j, b in enumerate(result.difficulties):
                    row = [str(j + 1), _fmt6(b)]
                    if result.standard_errors is not None:
                        row.append(_fmt6(result.standard_errors[j]))
                    fh.write(",".join(row) + "\n")
    else:
        json.dump({"manifest": manifest.to_dict(), "results": results}, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0 if result.converged else 2


def _load_simulate_config(path) -> tuple[ScenarioSpec, list[FitConfig], dict]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {
        "scenario", "guess_type", "prevalence", "severity", "mechanism",
        "I", "J", "methods", "nodes", "tol", "max_iter",
    }
    for key in raw:
        if key not in known:
            raise UsageError(f"unknown config field {key!r}")
    try:
        spec = ScenarioSpec(
            scenario=raw.get("scenario", "clean"),
            guess_type=raw.get("guess_type", "unbiased"),
            prevalence=float(raw.get("prevalence", 0.0)),
            severity=float(raw.get("severity", 0.0)),
            mechanism=raw.get("mechanism", "R1"),
            n_respondents=int(raw.get("I", 1000)),
            n_items=int(raw.get("J", 15)),
        )
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid scenario config: {exc}") from exc
    methods = []
    for entry in raw.get("methods", [{"method": "mmle"}]):
        if isinstance(entry, str):
            cfg = _parse_method_spec(entry)
        else:
            cfg = FitConfig(
                method=entry.get("method", "mmle"),
                alpha=entry.get("alpha"),
                n_nodes=int(raw.get("nodes", 21)),
                tol=float(raw.get("tol", 1e-4)),
                max_iter=int(raw.get("max_iter", 1000)),
            )
        methods.append(cfg)
    return spec, methods, raw


def cmd_simulate(args) -> int:
    if args.dump_mechanism:
        theta = np.linspace(-4.0, 4.0, 161)
        with open(args.dump_mechanism, "w", encoding="utf-8") as fh:
            fh.write("theta,R1,R2\n")
            for t, r1, r2 in zip(
                theta, mechanism_curve("R1", theta), mechanism_curve("R2", theta)
            ):
                fh.write(f"{t:.3f},{r1:.10f},{r2:.10f}\n")
        if not args.config:
            return 0
    if not args.config:
        raise UsageError("--config is required unless only --dump-mechanism is used")
    spec, methods, raw = _load_simulate_config(args.config)
    summaries = run_study(spec, methods, args.reps, args.seed, workers=args.workers)

    resolved = dict(raw)
    resolved.update({"reps": args.reps, "seed": args.seed})
    manifest = RunManifest(
        command="simulate", config_digest=config_digest(resolved), seed=args.seed
    )
    settings_cols = [
        ("scenario", spec.scenario),
        ("guess_type", spec.guess_type),
        ("prevalence", spec.prevalence),
        ("severity", spec.severity),
        ("mechanism", spec.mechanism if spec.scenario == "ability_dependent" else ""),
        ("I", spec.n_respondents),
        ("J", spec.n_items),
        ("reps", args.reps),
    ]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(manifest.to_dict(), sort_keys=True) + "\n")
            header = [k for k, _ in settings_cols]
            for s in summaries:
                header += [f"{s.method}_bias", f"{s.method}_rmse",
                           f"{s.method}_bias_se", f"{s.method}_rmse_se"]
            fh.write(",".join(header) + "\n")
            row = [str(v) for _, v in settings_cols]
            for s in summaries:
                row += [_fmt6(s.bias), _fmt6(s.rmse), _fmt6(s.bias_se), _fmt6(s.rmse_se)]
            fh.write(",".join(row) + "\n")
    else:
        doc = {
            "manifest": manifest.to_dict(),
            "settings": dict(settings_cols),
            "results": [
                {
                    "method": s.method,
                    "bias": s.bias,
                    "rmse": s.rmse,
                    "bias_se": s.bias_se,
                    "rmse_se": s.rmse_se,
                    "replications": s.replications,
                    "failures": s.failures,
                }
                for s in summaries
            ],
        }
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def cmd_influence(args) -> int:
    if args.btrue:
        difficulties = np.array([float(x) for x in args.btrue.split(",")])
        bank = ItemBank(difficulties=difficulties)
    else:
        bank = true_difficulties(args.j)
    if bank.n_items > PATTERN_CAP:
        raise UsageError(
            f"influence tables enumerate 2^J patterns; J is capped at {PATTERN_CAP}"
        )
    methods = [_parse_method_spec(tok) for tok in args.methods.split(",")]
    report = influence_table(bank, args.i, methods, args.reps, args.seed)

    resolved = {
        "btrue": [float(x) for x in bank.difficulties],
        "I": args.i,
        "methods": args.methods,
        "reps": args.reps,
    }
    manifest = RunManifest(
        command="influence", config_digest=config_digest(resolved), seed=args.seed
    )
    labels = list(report.norms)
    lines = ["# " + json.dumps(manifest.to_dict(), sort_keys=True)]
    lines.append(",".join(["pattern", "prob_percent"] + labels))
    for idx, (row, prob) in enumerate(zip(report.patterns, report.probabilities)):
        pattern_txt = "".join(str(int(v)) for v in row)
        cells = [pattern_txt, f"{100 * prob:.3f}"]
        cells += [_fmt6(report.norms[lab][idx]) for lab in labels]
        lines.append(",".join(cells))
    ges = ["gross_error_sensitivity", ""] + [
        _fmt6(report.gross_error_sensitivity[lab]) for lab in labels
    ]
    lines.append(",".join(ges))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustirt",
        description="Robust Rasch difficulty estimation (MMLE, DPD, gamma divergence)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate item difficulties from a response file")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--method", choices=METHODS, default="mmle")
    p_fit.add_argument("--alpha", type=float, default=None)
    p_fit.add_argument("--nodes", type=int, default=21)
    p_fit.add_argument("--tol", type=float, default=1e-4)
    p_fit.add_argument("--max-iter", type=int, default=1000)
    p_fit.add_argument("--se", action="store_true", help="emit sandwich standard errors")
    p_fit.add_argument("--out", default=None)
    p_fit.add_argument("--format", choices=("json", "csv"), default="json")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a seeded replication study")
    p_sim.add_argument("--config", default=None)
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument(
        "--dump-mechanism",
        default=None,
        help="write theta samples of the R1/R2 guessing curves to this path",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_inf = sub.add_parser("influence", help="pattern-level influence-function table")
    group = p_inf.add_mutually_exclusive_group()
    group.add_argument("--btrue", default=None, help="comma-separated true difficulties")
    group.add_argument("--j", type=int, default=5, help="evenly spaced bank size")
    p_inf.add_argument("--i", type=int, default=2000)
    p_inf.add_argument("--methods", default="mmle,dpd:0.1,dpd:0.3,dpd:0.5")
    p_inf.add_argument("--reps", type=int, default=100)
    p_inf.add_argument("--seed", type=int, default=0)
    p_inf.add_argument("--out", default=None)
    p_inf.set_defaults(func=cmd_influence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
