"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 a bound verdict failed under
``--strict``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from .average_case import average_report, optimal_decoder_average, parse_order
from .decoder import decoder_from_dict
from .evaluation import (
    BASELINES, CONSTANT, RnspCertificate, check_rnsp_bound, evaluate_decoder,
    forward_model_sweep, make_baseline, rnsp_falsify,
)
from .io import (
    SpecError, config_hash, emit_report, parse_forward, parse_problem_spec, problem_to_dict,
)
from .measure import DiscreteMeasure, MeasureError, disintegrate
from .metrics import MetricError
from .problem import Problem, ProblemError, build_measurement_table
from .worst_case import (
    FEASIBLE_PLUS_GRID, POLICIES, CandidatePolicy, optimal_decoder_worst, worst_case_report,
)

log = logging.getLogger("kersize")

EXIT_OK, EXIT_INVALID, EXIT_VERDICT = 0, 2, 3


class CliError(Exception):
    pass


def two_point_problem() -> Problem:
    """Recover (x1, x2) from x1 on M1 = {(0, 0), (0, 1)}, noiseless."""
    return Problem.linear([[1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]])


def two_point_measure(alpha: float) -> DiscreteMeasure:
    if not 0 <= alpha <= 1:
        raise CliError(f"--alpha must lie in [0, 1], got {alpha}")
    return DiscreteMeasure(np.array([[alpha], [1.0 - alpha]]))


def _common(parser: argparse.ArgumentParser, problem: bool = True) -> None:
    if problem:
        parser.add_argument("--problem", required=True, help="problem spec JSON")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--strict", action="store_true",
                        help="exit 3 when any bound verdict fails")
    parser.add_argument("--timing", action="store_true",
                        help="include wall-clock seconds in the report (breaks byte-identity)")


def _policy_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--candidates", choices=POLICIES,
                        help="Chebyshev search policy (default depends on the metric)")
    parser.add_argument("--grid-step", type=float, help="grid step for feasible_plus_grid")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kersize", description=(
        "Kernel-size accuracy bounds and optimal set-valued decoders for finite inverse problems."))
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="kernel size, optimal decoder and bound verdicts")
    an.add_argument("mode", choices=("worst", "average"))
    an.add_argument("--p", default="2", help="order in [1, inf] for average mode")
    an.add_argument("--policy", help="average decoder: mean|median|candidate_argmin|support_chebyshev")
    _policy_args(an)
    _common(an)

    de = sub.add_parser("decode", help="optimal decoder output for one measurement")
    de.add_argument("--y", required=True, help="measurement coordinates, comma separated")
    de.add_argument("--mode", choices=("worst", "avg"), default="worst")
    de.add_argument("--p", default="2")
    de.add_argument("--policy")
    _policy_args(de)
    _common(de)

    ev = sub.add_parser("evaluate", help="errors and gap ratios of a decoder")
    ev.add_argument("--decoder", required=True,
                    help="decoder table JSON path, or baseline:KIND[:x1,x2,...]")
    ev.add_argument("--p", default="", help="comma-separated orders, e.g. 1,2,inf")
    _common(ev)

    sw = sub.add_parser("sweep", help="worst-case kernel size over a family of forward models")
    sw.add_argument("--models", required=True, help="JSON list of forward-model specs")
    _common(sw)

    rn = sub.add_parser("rnsp", help="check a robust null-space certificate")
    rn.add_argument("--d1", type=float, required=True)
    rn.add_argument("--d2", type=float, required=True)
    rn.add_argument("--probes", type=int, default=10_000)
    _common(rn)

    ex = sub.add_parser("example", help="reproduce a built-in worked example")
    ex.add_argument("name", choices=("two-point",))
    ex.add_argument("--alpha", type=float, default=0.5)
    ex.add_argument("--p", default="2")
    _common(ex, problem=False)
    return ap


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_problem(path: str):
    problem, mu = parse_problem_spec(_read(path))
    return problem, mu


def _candidates(args) -> Optional[CandidatePolicy]:
    if not getattr(args, "candidates", None):
        if getattr(args, "grid_step", None):
            return CandidatePolicy(FEASIBLE_PLUS_GRID, grid_step=args.grid_step)
        return None
    try:
        return CandidatePolicy(args.candidates, grid_step=args.grid_step)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _orders(text: str) -> List[float]:
    return [parse_order(tok) for tok in text.split(",") if tok.strip()]


def _echo(args, extra: dict) -> dict:
    # --threads, --out and --timing never change results, so they stay out of the echo
    out = {"command": args.command}
    out.update(extra)
    return out


def _analyze(args) -> dict:
    problem, mu = _load_problem(args.problem)
    spec = problem_to_dict(problem, mu)
    cands = _candidates(args)
    if args.mode == "worst":
        rep = worst_case_report(problem, cands, threads=args.threads)
        echo = _echo(args, {"mode": "worst", "candidates": rep.policy})
        return {"command": echo, "config_hash": config_hash(spec, echo),
                "worst_case": rep.to_dict()}
    order = parse_order(args.p)
    rep = average_report(problem, mu, order, args.policy, cands, threads=args.threads)
    echo = _echo(args, {"mode": "average", "p": order, "policy": rep.policy,
                        "candidates": cands.to_dict() if cands else None})
    return {"command": echo, "config_hash": config_hash(spec, echo), "average": rep.to_dict()}


def _parse_coords(text: str) -> List[float]:
    try:
        return [float(tok) for tok in text.replace(" ", ",").split(",") if tok]
    except ValueError:
        raise CliError(f"cannot parse measurement {text!r}") from None


def _decode(args) -> dict:
    problem, mu = _load_problem(args.problem)
    t = build_measurement_table(problem)
    y = _parse_coords(args.y)
    g = t.lookup_y(y)
    cands = _candidates(args)
    if args.mode == "worst":
        dec = optimal_decoder_worst(problem, t, cands, threads=args.threads)
        echo = _echo(args, {"mode": "worst", "y": y})
    else:
        mu = mu if mu is not None else DiscreteMeasure.uniform(problem)
        dis = disintegrate(mu, t)
        order = parse_order(args.p)
        dec = optimal_decoder_average(problem, t, dis, order, args.policy, cands, args.threads)
        echo = _echo(args, {"mode": "avg", "y": y, "p": order, "policy": args.policy})
    return {"command": echo, "config_hash": config_hash(problem_to_dict(problem, mu), echo),
            "decode": {"key": list(g.key), "y": y, "outputs": [list(p) for p in dec(g.key)],
                       "selected": list(dec.select(g.key)),
                       "feasible": t.feasible_points(g).tolist()}}


def _decoder_arg(args, problem, t):
    spec = args.decoder
    if spec.startswith("baseline:"):
        parts = spec.split(":", 2)
        kind = parts[1]
        if kind not in BASELINES:
            raise CliError(f"unknown baseline {kind!r}; expected one of {', '.join(BASELINES)}")
        point = None
        if kind == CONSTANT:
            if len(parts) < 3:
                raise CliError("baseline:constant needs a point, e.g. baseline:constant:0,0")
            point = _parse_coords(parts[2])
        return make_baseline(kind, problem, t, point=point, seed=args.seed)
    try:
        data = json.loads(_read(spec))
    except json.JSONDecodeError as exc:
        raise CliError(f"{spec}: invalid JSON: {exc}") from None
    return decoder_from_dict(data, t, name=Path(spec).stem)


def _evaluate(args) -> dict:
    problem, mu = _load_problem(args.problem)
    t = build_measurement_table(problem)
    dec = _decoder_arg(args, problem, t)
    orders = _orders(args.p)
    rep = evaluate_decoder(problem, mu, dec, orders, table=t)
    echo = _echo(args, {"decoder": args.decoder, "p": orders, "seed": args.seed})
    return {"command": echo, "config_hash": config_hash(problem_to_dict(problem, mu), echo),
            "evaluation": rep.to_dict()}


def _sweep(args) -> dict:
    problem, mu = _load_problem(args.problem)
    try:
        models = json.loads(_read(args.models))
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.models}: invalid JSON: {exc}") from None
    if not isinstance(models, list) or not models:
        raise SpecError("models", "must be a non-empty list of forward-model specs")
    ids, family = [], []
    for n, m in enumerate(models):
        if not isinstance(m, dict):
            raise SpecError(f"models[{n}]", "must be an object")
        m = dict(m)
        ids.append(str(m.pop("id", f"{n:04d}")))
        family.append(parse_forward(m, f"models[{n}]"))
    rep = forward_model_sweep(family, problem, ids)
    echo = _echo(args, {"models": [f.to_dict() for f in family], "ids": ids})
    return {"command": echo, "config_hash": config_hash(problem_to_dict(problem, mu), echo),
            "sweep": rep.to_dict()}


def _rnsp(args) -> dict:
    problem, mu = _load_problem(args.problem)
    cert = RnspCertificate(args.d1, args.d2)
    verdict = check_rnsp_bound(problem, cert)
    h = rnsp_falsify(problem.forward.matrix, problem.model_class.points, cert, args.probes,
                     args.seed, problem.metric_x, problem.metric_x, problem.metric_y)
    echo = _echo(args, {"d1": args.d1, "d2": args.d2, "probes": args.probes,
                        "seed": args.seed})
    return {"command": echo, "config_hash": config_hash(problem_to_dict(problem, mu), echo),
            "rnsp": {"consequence": verdict.to_dict(),
                     "falsifier": {"counterexample": None if h is None else h.tolist(),
                                   "conclusive": h is not None}}}


def _example(args) -> dict:
    problem = two_point_problem()
    mu = two_point_measure(args.alpha)
    order = parse_order(args.p)
    w = worst_case_report(problem, threads=args.threads)
    a = average_report(problem, mu, order, threads=args.threads)
    echo = _echo(args, {"name": args.name, "alpha": args.alpha, "p": order})
    return {"command": echo, "config_hash": config_hash(problem_to_dict(problem, mu), echo),
            "worst_case": w.to_dict(), "average": a.to_dict()}


HANDLERS = {"analyze": _analyze, "decode": _decode, "evaluate": _evaluate,
            "sweep": _sweep, "rnsp": _rnsp, "example": _example}


def verdicts_failed(report: dict) -> List[str]:
    failed = []
    for section in ("worst_case", "average"):
        for name, ok in report.get(section, {}).get("verdicts", {}).items():
            if ok is False:
                failed.append(f"{section}.{name}")
    for name, ok in report.get("evaluation", {}).get("verdicts", {}).items():
        if ok is False:
            failed.append(f"evaluation.{name}")
    if report.get("rnsp", {}).get("consequence", {}).get("ok") is False:
        failed.append("rnsp.consequence")
    return failed


def run_command(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    start = time.perf_counter()
    try:
        report = HANDLERS[args.command](args)
    except (SpecError, ProblemError, MetricError, MeasureError, CliError, ValueError) as exc:
        print(f"kersize: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    elapsed = time.perf_counter() - start
    log.info("%s finished in %.3f s", args.command, elapsed)
    if args.timing:
        report["wall_clock_seconds"] = elapsed
    data = emit_report(report, args.format)
    if args.out:
        try:
            Path(args.out).write_bytes(data)
        except OSError as exc:
            print(f"kersize: error: cannot write {args.out}: {exc.strerror or exc}",
                  file=sys.stderr)
            return EXIT_INVALID
    else:
        sys.stdout.write(data.decode())
    failed = verdicts_failed(report)
    if failed:
        print(f"kersize: verdict failed: {', '.join(failed)}", file=sys.stderr)
        if args.strict:
            return EXIT_VERDICT
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    sys.exit(run_command())


if __name__ == "__main__":
    main()
