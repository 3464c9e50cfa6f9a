"""Command-line interface: ``twostage-mw <command> [options]``.

Exit codes: 0 success, 1 validation mismatch, 2 input or domain error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from dataclasses import dataclass
from types import SimpleNamespace
from typing import Optional, Sequence

from .cumulants import CumulantSet, Which, Weighting, mixed_cumulants, paper_aggregates, standardized_shape
from .errors import DegenerateError, TwoStageError
from .moments import MomentSet, Mode, moment_key, moments_general, moments_null, parse_moment_key
from .oracle import ValidationMode, design_grid, simulate_joint, validate_formulas
from .pi_model import (
    PiVector,
    null_pi_vector,
    parse_sampler,
    pi_monte_carlo,
    pi_plugin_from_data,
)
from .quantile import critical_values_cf, critical_values_exact, critical_values_monte_carlo
from .report import (
    SCHEMA,
    InputError,
    dumps,
    parse_number,
    read_moments_report,
    read_pi_file,
    read_trial_csv,
    render_value,
)
from .ustat import SampleDesign, mann_whitney_u, two_stage_decision

COMMANDS = ("moments", "cumulants", "critical-values", "validate", "simulate", "test")
PI_SOURCES = ("null-table", "file", "plugin-from-data", "monte-carlo")


@dataclass(frozen=True)
class RunConfig:
    command: str
    design: Optional[SampleDesign] = None
    mode: str = "null"
    pi_source: str = "null-table"
    alpha1: Optional[float] = None
    alpha_overall: Optional[float] = None
    seed: Optional[int] = None
    replications: Optional[int] = None
    output_path: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.pi_source not in PI_SOURCES:
            raise InputError(f"unknown pi source {self.pi_source!r}")
        if self.alpha1 is not None or self.alpha_overall is not None:
            a1, a = self.alpha1, self.alpha_overall
            if a1 is None or a is None or not 0 < a1 < a < 1:
                raise InputError(f"need 0 < alpha1 < alpha < 1, got {a1}, {a}")


# ---------------------------------------------------------------------------
# argument parsing

def _add_design(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("design")
    g.add_argument("-m", type=int, required=required, help="stage-1 controls")
    g.add_argument("-n", type=int, required=required, help="stage-1 treated")
    g.add_argument("-M", type=int, required=required, help="total controls")
    g.add_argument("-N", type=int, required=required, help="total treated")


def _add_mode(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--null", dest="mode", action="store_const", const="null", help="null hypothesis (default)")
    g.add_argument("--general", dest="mode", action="store_const", const="general", help="general alternative")
    p.set_defaults(mode="null")
    p.add_argument("--pi-source", choices=PI_SOURCES, default=None,
                   help="where general-mode pi's come from (default: null-table)")
    p.add_argument("--pi-file", help="JSON object of the 13 pi values")


def _add_sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sampler-x", default="uniform:0,1", help="e.g. uniform:0,1 or normal:0,1")
    p.add_argument("--sampler-y", default="uniform:0.3,1.3")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--seed", type=int, default=12345)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--float", dest="as_float", action="store_true", help="render exact rationals as floats")
    p.add_argument("--no-timestamp", action="store_true", help="omit the generation time")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twostage-mw", description="Two-stage Mann-Whitney moments, cumulants and critical values.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="joint raw moments of (U1, U2)")
    _add_design(p)
    _add_mode(p)
    p.add_argument("--data", help="trial CSV for --pi-source plugin-from-data")
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("cumulants", help="mixed cumulants and aggregates")
    _add_design(p, required=False)
    _add_mode(p)
    p.add_argument("--data", help="trial CSV for --pi-source plugin-from-data")
    p.add_argument("--moments-file", help="report written by the moments command")
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("critical-values", help="calibrate (c1, c2)")
    _add_design(p)
    _add_mode(p)
    p.add_argument("--data", help="trial CSV for --pi-source plugin-from-data")
    p.add_argument("--alpha1", type=float, default=0.025)
    p.add_argument("--alpha", type=float, default=0.05, help="overall level")
    p.add_argument("--method", choices=("exact", "cf", "montecarlo"), default="exact")
    p.add_argument("--continuity", action="store_true", help="half-unit continuity correction (cf only)")
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("validate", help="check the closed forms against the oracles")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--null", dest="vmode", action="store_const", const=ValidationMode.NullExact)
    g.add_argument("--general-reduction", dest="vmode", action="store_const", const=ValidationMode.GeneralReduction)
    g.add_argument("--symbolic", dest="vmode", action="store_const", const=ValidationMode.GeneralSymbolic)
    g.add_argument("--monte-carlo", dest="vmode", action="store_const", const=ValidationMode.GeneralMonteCarlo)
    p.set_defaults(vmode=ValidationMode.NullExact)
    p.add_argument("--max-total", type=int, default=8, help="all designs with M + N up to this")
    _add_design(p, required=False)
    p.add_argument("--tolerance", type=float, default=None,
                   help="absolute for exact modes (default 0); standard errors for --monte-carlo (default 5)")
    p.add_argument("--pi-replications", type=int, default=10_000_000)
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("simulate", help="Monte Carlo joint moments")
    _add_design(p)
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("test", help="apply the two-stage decision rule to a trial")
    p.add_argument("--c1", type=int, required=True)
    p.add_argument("--c2", type=int, required=True)
    p.add_argument("--data", required=True, help="CSV with header group,stage,value")
    _add_output(p)
    return parser


def config_from_args(args) -> RunConfig:
    alphas = (args.alpha1, args.alpha) if args.command == "critical-values" else (None, None)
    return RunConfig(
        command=args.command,
        design=_design(args) if hasattr(args, "m") else None,
        mode=getattr(args, "mode", "null"),
        pi_source=getattr(args, "pi_source", None) or "null-table",
        alpha1=alphas[0],
        alpha_overall=alphas[1],
        seed=getattr(args, "seed", None),
        replications=getattr(args, "replications", None),
        output_path=args.output,
    )


# ---------------------------------------------------------------------------
# commands

def _design(args) -> Optional[SampleDesign]:
    if args.m is None and args.n is None and args.M is None and args.N is None:
        return None
    if None in (args.m, args.n, args.M, args.N):
        raise InputError("give all of -m -n -M -N")
    return SampleDesign(args.m, args.n, args.M, args.N)


def _design_dict(d: SampleDesign) -> dict:
    return {"m": d.m, "n": d.n, "M": d.M, "N": d.N}


def _read_data(path: str):
    with open(path, newline="") as fh:
        return read_trial_csv(fh)


def _resolve_pi(args) -> tuple[Optional[PiVector], dict]:
    """Pi vector for general mode plus a report section describing its origin."""
    source = args.pi_source or ("file" if args.pi_file else "null-table")
    info: dict = {"source": source}
    if source == "null-table":
        pi = null_pi_vector()
    elif source == "file":
        if not args.pi_file:
            raise InputError("--pi-source file needs --pi-file")
        with open(args.pi_file) as fh:
            pi = read_pi_file(fh)
        pi.validate()
    elif source == "plugin-from-data":
        if not getattr(args, "data", None):
            raise InputError("--pi-source plugin-from-data needs --data")
        data = _read_data(args.data)
        pi = pi_plugin_from_data(data.x_stage1 + data.x_stage2, data.y_stage1 + data.y_stage2)
    else:
        reps = args.replications or 1_000_000
        est = pi_monte_carlo(parse_sampler(args.sampler_x), parse_sampler(args.sampler_y), reps, args.seed, args.threads)
        pi = est.value
        info.update(replications=reps, seed=args.seed, sampler_x=args.sampler_x,
                    sampler_y=args.sampler_y, standard_error=est.standard_error.as_dict())
    return pi, info


def _moment_set(args, design: SampleDesign) -> tuple[MomentSet, dict]:
    if args.mode == "null":
        return moments_null(design), {}
    pi, info = _resolve_pi(args)
    info["values"] = pi.as_dict()
    return moments_general(design, pi), {"pi": info}


def _shape_section(c: CumulantSet) -> dict:
    out = {}
    for which in Which:
        try:
            s = standardized_shape(c, which)
            out[which.value] = {"mean": s.mean, "variance": s.variance,
                                "skewness": s.skewness, "excess_kurtosis": s.excess_kurtosis}
        except DegenerateError:
            out[which.value] = None
    return out


def cmd_moments(args) -> tuple[dict, int]:
    d = _design(args)
    ms, extra = _moment_set(args, d)
    return {"mode": args.mode, "design": _design_dict(d), **extra, "moments": ms.named()}, 0


def cmd_cumulants(args) -> tuple[dict, int]:
    if args.moments_file:
        with open(args.moments_file) as fh:
            doc = read_moments_report(fh)
        d = SampleDesign(**{k: int(doc["design"][k]) for k in ("m", "n", "M", "N")})
        values = {parse_moment_key(k): parse_number(v) for k, v in doc["moments"].items()}
        mode = Mode.NullExact if doc.get("mode") == "null" else Mode.General
        ms = MomentSet(d, mode, values)
        report = {"mode": doc.get("mode"), "design": _design_dict(d)}
        if "pi" in doc:
            report["pi"] = doc["pi"]
    else:
        d = _design(args)
        if d is None:
            raise InputError("give a design (-m -n -M -N) or --moments-file")
        ms, extra = _moment_set(args, d)
        report = {"mode": args.mode, "design": _design_dict(d), **extra}
    c = mixed_cumulants(ms)
    report["cumulants"] = c.named()
    report["aggregates"] = {
        w.value: dict(zip(("k1", "k2", "k3", "k4"), paper_aggregates(c, w).as_tuple())) for w in Weighting
    }
    report["shape"] = _shape_section(c)
    return report, 0


def cmd_critical_values(args) -> tuple[dict, int]:
    d = _design(args)
    report = {"design": _design_dict(d), "method": args.method}
    if args.method == "exact":
        cv = critical_values_exact(d, args.alpha1, args.alpha)
    elif args.method == "montecarlo":
        reps = args.replications or 1_000_000
        cv = critical_values_monte_carlo(d, args.alpha1, args.alpha, reps, args.seed, args.threads)
        report.update(replications=reps, seed=args.seed)
    else:
        pi = None
        if args.mode == "general":
            pi, info = _resolve_pi(args)
            info["values"] = pi.as_dict()
            report["pi"] = info
        cv = critical_values_cf(d, args.alpha1, args.alpha, pi, continuity=args.continuity)
        report["continuity"] = args.continuity
    report["critical_values"] = {
        "c1": cv.c1, "c2": cv.c2,
        "alpha1_nominal": cv.alpha1_nominal, "alpha_overall_nominal": cv.alpha_overall_nominal,
        "alpha1_spent": cv.alpha1_spent, "achieved_size": cv.achieved_size, "method": cv.method,
    }
    return report, 0


def cmd_validate(args) -> tuple[dict, int]:
    d = _design(args)
    designs = [d] if d is not None else design_grid(args.max_total)
    mode = args.vmode
    mc = mode is ValidationMode.GeneralMonteCarlo
    tol = args.tolerance if args.tolerance is not None else (5.0 if mc else 0.0)
    kwargs = {}
    if mc:
        kwargs = dict(sampler_x=parse_sampler(args.sampler_x), sampler_y=parse_sampler(args.sampler_y),
                      pi_replications=args.pi_replications,
                      sim_replications=args.replications or 1_000_000,
                      seed=args.seed, threads=args.threads)
        if d is None:
            designs = [SampleDesign(3, 3, 6, 6)]
    result = validate_formulas(designs, mode, tol, **kwargs)
    records = [
        {"formula": r.formula, "evaluator": r.evaluator, "design": _design_dict(r.design),
         "engine": r.engine_value, "oracle": r.oracle_value, "deviation": r.deviation,
         "standard_error": r.standard_error, "verdict": r.verdict}
        for r in result.records
    ]
    report = {"mode": mode.value, "tolerance": tol, "designs": len(designs),
              "summary": dict(sorted(result.summary().items())), "records": records}
    return report, 0 if result.ok else 1


def cmd_simulate(args) -> tuple[dict, int]:
    d = _design(args)
    reps = args.replications or 100_000
    est = simulate_joint(d, parse_sampler(args.sampler_x), parse_sampler(args.sampler_y), reps, args.seed, args.threads)
    return {"design": _design_dict(d), "sampler_x": args.sampler_x, "sampler_y": args.sampler_y,
            "replications": reps, "seed": args.seed,
            "moments": est.named(),
            "standard_errors": {moment_key(*o): se for o, se in est.standard_errors.items()}}, 0


def cmd_test(args) -> tuple[dict, int]:
    data = _read_data(args.data)
    d = data.design
    if not (1 <= args.c1 and 1 <= args.c2):
        raise InputError("critical values must be positive integers")
    u1 = mann_whitney_u(data.x_stage1, data.y_stage1)
    supplier = lambda: mann_whitney_u(data.x_stage1 + data.x_stage2, data.y_stage1 + data.y_stage2)  # noqa: E731

    decision = two_stage_decision(u1, supplier, SimpleNamespace(c1=args.c1, c2=args.c2))
    return {"design": _design_dict(d), "c1": args.c1, "c2": args.c2,
            "u1": decision.u1, "u2": decision.u2, "decision": decision.outcome}, 0


HANDLERS = {
    "moments": cmd_moments,
    "cumulants": cmd_cumulants,
    "critical-values": cmd_critical_values,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "test": cmd_test,
}


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0) and 2
    if getattr(args, "threads", None) is None:
        args.threads = os.cpu_count() or 1
    try:
        config_from_args(args)
        body, code = HANDLERS[args.command](args)
    except (TwoStageError, ValueError, OSError) as exc:
        print(f"twostage-mw: error: {exc}", file=stderr)
        return 2
    report = {"schema": SCHEMA, "command": args.command}
    if not args.no_timestamp:
        report["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    report.update(body)
    text = dumps(render_value(report, args.as_float))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
