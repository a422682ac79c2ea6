"""Command-line front end.

Subcommands: ``sweep`` (prediction tables over a prior grid), ``check``
(anti-exhaustivity region reports), ``simulate`` (raw recursion tables from
the generic engine), ``fit`` / ``compare`` (maximum-likelihood estimation and
AIC ranking), and ``synth`` (synthetic dataset generation).  All results go
to standard output as CSV or JSON; diagnostics go to standard error.  Exit
codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .analysis import Predicate, SWEEP_COLUMNS, bwrsa_antiexh_threshold, scan_regions, sweep
from .data import SynthDesign, parse_dataset, read_column_map, synth_generate, write_dataset
from .engine import iterate
from .fitting import FIT_COLUMNS, FitOptions, NoiseParams, compare, fit, fit_result_row
from .models import ModelId, XI_MODELS
from .oracles import canonical_scenario, svrsa_oracle
from .scenario import ModelParams

SIMULATE_COLUMNS = ("level", "role", "given", "outcome", "probability")
CHECK_COLUMNS = ("model", "predicate", "interval_lo", "interval_hi", "omega_threshold")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_rows(rows: list[dict], columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, default=float) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in columns])
    return out.getvalue()


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", default=None, help="write output to this file")


def _add_model_params(parser: argparse.ArgumentParser, required_model=True) -> None:
    names = ", ".join(m.value for m in ModelId)
    parser.add_argument("--model", required=required_model, help=f"one of: {names}")
    parser.add_argument("--params", default=None,
                        help="JSON file with lambda/delta_ab/delta_anb/xi")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="rationality (positive)")
    parser.add_argument("--cost-ab", type=float, default=None,
                        help="cost of 'A and B' relative to 'A'")
    parser.add_argument("--cost-anb", type=float, default=None,
                        help="cost of 'A and not B' relative to 'A'")
    parser.add_argument("--xi", type=float, default=None,
                        help="extra prior (wonkiness or total-QUD prior)")


def _build_params(args, parser: argparse.ArgumentParser) -> ModelParams:
    base = {"lam": None, "delta_ab": 0.0, "delta_anb": 0.0, "xi": None}
    if args.params:
        loaded = ModelParams.from_json(Path(args.params).read_text(encoding="utf-8"))
        base = {"lam": loaded.lam, "delta_ab": loaded.delta_ab,
                "delta_anb": loaded.delta_anb, "xi": loaded.xi}
    for key, value in (("lam", args.lam), ("delta_ab", args.cost_ab),
                       ("delta_anb", args.cost_anb), ("xi", args.xi)):
        if value is not None:
            base[key] = value
    if base["lam"] is None:
        parser.error("--lambda is required (directly or via --params)")
    try:
        return ModelParams(**base)
    except ValueError as exc:
        parser.error(str(exc))


def _model(args, parser: argparse.ArgumentParser) -> ModelId:
    try:
        return ModelId.from_name(args.model)
    except ValueError as exc:
        parser.error(str(exc))


def _load_dataset(args):
    text = Path(args.data).read_text(encoding="utf-8")
    column_map = None
    if getattr(args, "column_map", None):
        column_map = read_column_map(Path(args.column_map).read_text(encoding="utf-8"))
    dataset, errors = parse_dataset(text, column_map)
    for err in errors:
        print(f"warning: line {err.line}: {err.message}", file=sys.stderr)
    return dataset


def _grid(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("--grid must be a positive point count")
    return np.arange(1, n + 1) / (n + 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsa-exh",
        description="Exhaustivity/anti-exhaustivity predictions, checks, and fits "
                    "for recursive speaker-listener models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="prediction table over a prior grid")
    _add_model_params(p_sweep)
    p_sweep.add_argument("--grid", type=int, default=99,
                         help="number of evenly spaced interior priors")
    _add_common(p_sweep)

    p_check = sub.add_parser("check", help="anti-exhaustivity region report")
    _add_model_params(p_check)
    p_check.add_argument("--predicate", default=Predicate.LISTENER_ANTI_EXH.value,
                         help="one of: " + ", ".join(pr.value for pr in Predicate))
    p_check.add_argument("--grid-step", type=float, default=0.005)
    _add_common(p_check)

    p_sim = sub.add_parser("simulate", help="raw recursion tables from the engine")
    _add_model_params(p_sim)
    p_sim.add_argument("--p", type=float, required=True,
                       help="conditional prior of the A-and-B world")
    p_sim.add_argument("--depth", type=int, default=2)
    _add_common(p_sim)

    p_fit = sub.add_parser("fit", help="maximum-likelihood fit of one model")
    p_fit.add_argument("--model", required=True)
    _add_fit_args(p_fit)

    p_cmp = sub.add_parser("compare", help="fit several models, rank by AIC")
    p_cmp.add_argument("--models", default="all",
                       help="'all' or comma-separated model names")
    _add_fit_args(p_cmp)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_model_params(p_synth)
    p_synth.add_argument("--sigma-a", type=float, required=True)
    p_synth.add_argument("--sigma-ab", type=float, required=True)
    p_synth.add_argument("--epsilon", type=float, required=True)
    p_synth.add_argument("--seed", type=lambda s: _seed(s), default=0)
    p_synth.add_argument("--levels", type=int, default=SynthDesign.levels)
    p_synth.add_argument("--n-utt-a", type=int, default=SynthDesign.comprehension_a)
    p_synth.add_argument("--n-utt-ab", type=int, default=SynthDesign.comprehension_ab)
    p_synth.add_argument("--n-world-a", type=int, default=SynthDesign.production_a)
    p_synth.add_argument("--n-world-ab", type=int, default=SynthDesign.production_ab)
    p_synth.add_argument("--prior-mean", type=float, default=SynthDesign.prior_mean)
    p_synth.add_argument("--prior-sd", type=float, default=SynthDesign.prior_sd)
    p_synth.add_argument("--out", default=None)
    return parser


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_fit_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="dataset CSV")
    parser.add_argument("--column-map", default=None,
                        help="logical=actual column mapping file")
    parser.add_argument("--equal-costs", action="store_true",
                        help="constrain both conjunction costs to one value")
    parser.add_argument("--restarts", type=int, default=32)
    parser.add_argument("--seed", type=lambda s: _seed(s), default=0)
    _add_common(parser)


def _cmd_sweep(args, parser) -> str:
    model = _model(args, parser)
    params = _build_params(args, parser)
    rows = sweep(model, params, _grid(args.grid))
    return _write_rows(rows, SWEEP_COLUMNS, args.format)


def _cmd_check(args, parser) -> str:
    model = _model(args, parser)
    params = _build_params(args, parser)
    try:
        predicate = Predicate.from_name(args.predicate)
    except ValueError as exc:
        parser.error(str(exc))
    report = scan_regions(model, params, predicate, args.grid_step)
    threshold = (
        bwrsa_antiexh_threshold(params) if model is ModelId.BWRSA else None
    )
    if args.format == "json":
        payload = {
            "model": model.value,
            "predicate": predicate.value,
            "intervals": [list(iv) for iv in report.intervals],
        }
        if threshold is not None:
            payload["omega_threshold"] = threshold
        return json.dumps(payload, indent=2) + "\n"
    rows = [
        {"model": model.value, "predicate": predicate.value,
         "interval_lo": lo, "interval_hi": hi, "omega_threshold": threshold}
        for lo, hi in report.intervals
    ] or [{"model": model.value, "predicate": predicate.value,
           "interval_lo": None, "interval_hi": None, "omega_threshold": threshold}]
    return _write_rows(rows, CHECK_COLUMNS, "csv")


def _cmd_simulate(args, parser) -> str:
    model = _model(args, parser)
    params = _build_params(args, parser)
    if not 0.0 <= args.p <= 1.0:
        parser.error("--p must be in [0, 1]")
    if args.depth < 1:
        parser.error("--depth must be >= 1")
    rows = (
        _simulate_svrsa_rows(model, params, args.p, args.depth, parser)
        if model in (ModelId.SVRSA1, ModelId.SVRSA2)
        else _simulate_iterate_rows(model, params, args.p, args.depth)
    )
    return _write_rows(rows, SIMULATE_COLUMNS, args.format)


def _simulate_iterate_rows(model, params, p, depth) -> list[dict]:
    scenario, kwargs = canonical_scenario(model, params, p)
    result = iterate(scenario, params.lam, depth, **kwargs)
    rows = []
    worlds = [w.value for w in scenario.worlds]
    messages = [m.value for m in scenario.messages]
    s1 = np.exp(result.log_s1)
    for c, ctx in enumerate(scenario.contexts):
        for w, world in enumerate(worlds):
            for m, msg in enumerate(messages):
                rows.append({"level": 1, "role": "speaker",
                             "given": f"{world}|{ctx}", "outcome": msg,
                             "probability": float(s1[c, w, m])})
    for n in range(1, depth + 1):
        listener = result.listener(n)
        for m, msg in enumerate(messages):
            for w, world in enumerate(worlds):
                rows.append({"level": n, "role": "listener", "given": msg,
                             "outcome": world,
                             "probability": float(listener[m, w])})
        if n >= 2:
            speaker = result.speaker(n)
            for w, world in enumerate(worlds):
                for m, msg in enumerate(messages):
                    rows.append({"level": n, "role": "speaker", "given": world,
                                 "outcome": msg,
                                 "probability": float(speaker[w, m])})
    return rows


def _simulate_svrsa_rows(model, params, p, depth, parser) -> list[dict]:
    if depth > 2:
        parser.error("supervaluationist variants define levels 1 and 2 only")
    table = svrsa_oracle(params, np.array([p]), variant=1 if model is ModelId.SVRSA1 else 2)
    pred = table.at(0)
    rows = [
        {"level": 1, "role": "listener", "given": "A", "outcome": "w_ab",
         "probability": pred.post_a},
        {"level": 1, "role": "listener", "given": "A_AND_B", "outcome": "w_ab",
         "probability": pred.post_ab},
    ]
    if depth >= 2:
        messages = ("A", "A_AND_B", "A_AND_NOT_B")
        for world, dist in (("w_a", pred.prod_wa), ("w_ab", pred.prod_wab)):
            for m, msg in enumerate(messages):
                rows.append({"level": 2, "role": "speaker", "given": world,
                             "outcome": msg, "probability": float(dist[m])})
    return rows


def _cmd_fit(args, parser) -> str:
    model = ModelId.from_name(args.model)
    dataset = _load_dataset(args)
    options = FitOptions(restarts=args.restarts, seed=args.seed)
    result = fit(model, dataset, options=options, equal_costs=args.equal_costs)
    if result.at_bounds:
        print(f"note: {model.value} fit at bound for: "
              f"{', '.join(result.at_bounds)}", file=sys.stderr)
    return _write_rows([fit_result_row(result)], FIT_COLUMNS, args.format)


def _cmd_compare(args, parser) -> str:
    if args.models.strip() == "all":
        models = list(ModelId)
    else:
        models = [ModelId.from_name(name.strip()) for name in args.models.split(",")]
    dataset = _load_dataset(args)
    options = FitOptions(restarts=args.restarts, seed=args.seed)
    results = compare(models, dataset, options=options, equal_costs=args.equal_costs)
    return _write_rows([fit_result_row(r) for r in results], FIT_COLUMNS, args.format)


def _cmd_synth(args, parser) -> str:
    model = _model(args, parser)
    params = _build_params(args, parser)
    if model in XI_MODELS and params.xi is None:
        parser.error(f"{model.value} requires --xi")
    try:
        noise = NoiseParams(args.sigma_a, args.sigma_ab, args.epsilon)
        design = SynthDesign(
            levels=args.levels,
            comprehension_a=args.n_utt_a,
            comprehension_ab=args.n_utt_ab,
            production_a=args.n_world_a,
            production_ab=args.n_world_ab,
            prior_mean=args.prior_mean,
            prior_sd=args.prior_sd,
        )
    except ValueError as exc:
        parser.error(str(exc))
    dataset = synth_generate(model, params, noise, design, seed=args.seed)
    return write_dataset(dataset)


_COMMANDS = {
    "sweep": _cmd_sweep,
    "check": _cmd_check,
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "compare": _cmd_compare,
    "synth": _cmd_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")

            def _show(message, category, *unused):
                print(f"warning: {message}", file=sys.stderr)

            warnings.showwarning = _show
            text = _COMMANDS[args.command](args, parser)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(text, args.out)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
