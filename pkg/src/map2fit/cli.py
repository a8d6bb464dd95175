"""map2fit command line: simulate | moments | fit | kl | scan | compare-reps.

All randomized subcommands are driven by an explicit --seed (default 0);
re-running with identical inputs and flags reproduces every output except
wall-clock timings.  Bulk numeric output is CSV, reports are JSON, and the
scan / compare-reps / fit report paths can render a PNG figure next to the
delimited output.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .divergence import empirical_kl
from .errors import DegenerateVariance, Map2Error
from .estimate import (
    EstimationConfig,
    FitResult,
    fit,
    fit_both_forms,
    fit_target_moments,
    ml_fit_form,
    ml_fit_redundant,
    moments_match_start,
    select_form,
)
from .likelihood import sample_scale
from .models import (
    CanonicalForm,
    canonical_to_matrices,
    empirical_moments,
    redundant_to_matrices,
    stats_kernel,
    canonical_entries,
    theoretical_moments,
)
from .modelio import (
    SCHEMA_FIT_REPORT,
    SCHEMA_KL,
    load_config,
    load_model,
    model_as_dict,
    read_sample,
    write_json,
    write_sample,
)
from .simulate import (
    STREAM_COMPARE,
    STREAM_SCAN,
    InterarrivalSample,
    SimulationStart,
    random_canonical,
    random_redundant,
    simulate,
    substream,
)

_COMPARE_KL_RUNS = 50


class _InputError(Exception):
    """Bad user input: missing/unreadable files, malformed specs or flags."""


def _load_model(path: str):
    try:
        return load_model(path)
    except FileNotFoundError as exc:
        raise _InputError(f"model file not found: {path}") from exc
    except (ValueError, Map2Error) as exc:
        raise _InputError(f"cannot parse model file {path}: {exc}") from exc


def _load_sample(path: str) -> InterarrivalSample:
    try:
        times = read_sample(path)
        return InterarrivalSample(times, origin=str(path))
    except FileNotFoundError as exc:
        raise _InputError(f"sample file not found: {path}") from exc
    except ValueError as exc:
        raise _InputError(f"cannot parse sample file {path}: {exc}") from exc


def _build_config(args: argparse.Namespace) -> EstimationConfig:
    config = EstimationConfig()
    if getattr(args, "config", None):
        try:
            config = load_config(args.config, config)
        except FileNotFoundError as exc:
            raise _InputError(f"config file not found: {args.config}") from exc
        except ValueError as exc:
            raise _InputError(str(exc)) from exc
    overrides = {}
    if getattr(args, "tau", None) is not None:
        overrides["tau"] = args.tau
    if getattr(args, "multistarts", None) is not None:
        overrides["multistart_count"] = args.multistarts
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    try:
        return dataclasses.replace(config, **overrides)
    except ValueError as exc:
        raise _InputError(str(exc)) from exc


def _moments_payload(summary) -> dict:
    return {
        "rho1": summary.rho1,
        "mu1": summary.mu1,
        "mu2": summary.mu2,
        "mu3": summary.mu3,
    }


def _print_moments_table(rows: list[tuple[str, object]]) -> None:
    width = max(len("quantity"), *(len(name) for name, _ in rows))
    print(f"{'quantity':<{width + 2}}value")
    for name, value in rows:
        if isinstance(value, float):
            print(f"{name:<{width + 2}}{value:.10g}")
        else:
            print(f"{name:<{width + 2}}{value}")


def _stream_token(seed: int, purpose: int, index: int) -> int:
    """Stable integer sub-seed for nested pipelines."""
    return int(substream(seed, purpose, index).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _load_model(args.model)
    if args.start == "stationary":
        start = SimulationStart.stationary()
    else:
        start = SimulationStart.fixed(int(args.start))
    sample = simulate(spec.pair, args.n, start=start, seed=args.seed)
    header = (
        f"map2fit simulate v{__version__}\n"
        f"model: {spec.label} ({args.model})\n"
        f"n: {args.n}  seed: {args.seed}  start: {args.start}"
    )
    write_sample(args.out, sample.times, header=header)
    print(f"wrote {len(sample)} interarrival times to {args.out}")
    return 0


def cmd_moments(args: argparse.Namespace) -> int:
    if bool(args.model) == bool(args.sample):
        raise _InputError("exactly one of --model or --sample is required")
    if args.model:
        spec = _load_model(args.model)
        summary = theoretical_moments(spec.pair)
        rows = [("rho1", summary.rho1), ("mu1", summary.mu1),
                ("mu2", summary.mu2), ("mu3", summary.mu3)]
        print(f"theoretical moments of {spec.label}")
    else:
        sample = _load_sample(args.sample)
        try:
            summary = empirical_moments(sample.times)
            rows = [("rho1", summary.rho1), ("mu1", summary.mu1),
                    ("mu2", summary.mu2), ("mu3", summary.mu3)]
        except DegenerateVariance:
            arr = sample.times
            rows = [("rho1", "undefined (zero variance)"),
                    ("mu1", float(arr.mean())),
                    ("mu2", float((arr**2).mean())),
                    ("mu3", float((arr**3).mean()))]
        rows.append(("n", len(sample)))
        print(f"sample moments of {args.sample}")
    _print_moments_table(rows)
    return 0


def _fit_result_payload(result: FitResult) -> dict:
    if isinstance(result.model, tuple):  # pragma: no cover - defensive
        raise TypeError("unexpected model type")
    if result.form_selected is not None:
        fitted_pair = canonical_to_matrices(result.model)
        start_pair = canonical_to_matrices(result.start_model)
        fitted_dict = model_as_dict(fitted_pair, canonical=result.model)
        start_dict = model_as_dict(start_pair, canonical=result.start_model)
    else:
        fitted_pair = redundant_to_matrices(result.model)
        start_pair = redundant_to_matrices(result.start_model)
        fitted_dict = model_as_dict(fitted_pair)
        start_dict = model_as_dict(start_pair)
    return {
        "start": {"model": start_dict, "loglik": result.start_loglik.value},
        "fitted": {
            "model": fitted_dict,
            "loglik": result.loglik.value,
            "moments": _moments_payload(result.moments),
        },
        "iterations": result.iterations,
        "converged": result.converged,
        "diagnostics": result.diagnostics,
    }


def cmd_fit(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    sample = _load_sample(args.sample)
    config = _build_config(args)
    if args.plot and not args.out:
        raise _InputError("--plot requires --out to name the figure")

    target, target_fallback = fit_target_moments(sample)
    c, c_fallback = sample_scale(sample.times)

    results: dict[str, dict] = {}
    if args.representation == "canonical":
        if args.form == "both":
            both = fit_both_forms(sample, config)
            selected = select_form(both)
            for form, result in both.items():
                results[form.value] = _fit_result_payload(result)
        else:
            form = CanonicalForm.ONE if args.form == "one" else CanonicalForm.TWO
            start = moments_match_start(target, form, config)
            selected = ml_fit_form(sample, form, start, config)
            results[form.value] = _fit_result_payload(selected)
        selected_pair = canonical_to_matrices(selected.model)
        selected_model = model_as_dict(selected_pair, canonical=selected.model)
        selected_form = selected.form_selected.value
    else:
        selected = ml_fit_redundant(sample, config)
        results["redundant"] = _fit_result_payload(selected)
        selected_pair = redundant_to_matrices(selected.model)
        selected_model = model_as_dict(selected_pair)
        selected_form = None

    reference_kl = None
    if args.reference:
        ref = _load_model(args.reference)
        est = empirical_kl(
            ref.pair,
            selected_pair,
            n=len(sample),
            runs=args.runs,
            seed=args.seed if args.seed is not None else config.seed,
        )
        reference_kl = {
            "reference": ref.label,
            "value": est.value if math.isfinite(est.value) else None,
            "std_error": est.std_error,
            "runs": est.runs,
            "n": est.n,
            "degenerate_runs": est.degenerate_runs,
        }

    report = {
        "schema": SCHEMA_FIT_REPORT,
        "input": {
            "sample_file": str(args.sample),
            "n": len(sample),
            "sample_moments": _moments_payload(target),
            "target_fallback": target_fallback,
        },
        "config": dataclasses.asdict(config),
        "representation": args.representation,
        "results": results,
        "selected": {
            "form": selected_form,
            "model": selected_model,
            "loglik": selected.loglik.value,
            "start_loglik": selected.start_loglik.value,
            "moments": _moments_payload(selected.moments),
            "converged": selected.converged,
        },
        "scale": {"c": c, "fallback": c_fallback},
        "reference_kl": reference_kl,
        "seed": config.seed,
        "timing_seconds": round(time.perf_counter() - t0, 6),
    }
    text = write_json(args.out, report)
    if args.out:
        print(f"wrote fit report to {args.out}")
        if args.plot:
            from . import plots

            figure = Path(args.out).with_suffix(".png")
            plots.fit_overview(sample.times, selected_pair, figure)
            print(f"wrote figure to {figure}")
    else:
        print(text)
    return 0


def cmd_kl(args: argparse.Namespace) -> int:
    spec_a = _load_model(args.model_a)
    spec_b = _load_model(args.model_b)
    est = empirical_kl(spec_a.pair, spec_b.pair, n=args.n, runs=args.runs, seed=args.seed)
    payload = {
        "schema": SCHEMA_KL,
        "model_a": {"file": str(args.model_a), "label": spec_a.label},
        "model_b": {"file": str(args.model_b), "label": spec_b.label},
        "n": est.n,
        "runs": est.runs,
        "seed": args.seed,
        "value": est.value if math.isfinite(est.value) else None,
        "all_runs_degenerate": not math.isfinite(est.value),
        "std_error": est.std_error,
        "degenerate_runs": est.degenerate_runs,
    }
    text = write_json(args.out, payload)
    if args.out:
        print(f"wrote divergence estimate to {args.out}")
    else:
        print(text)
    return 0


def cmd_scan(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(substream(args.seed, STREAM_SCAN, 0))
    rows = []
    for k in range(args.n):
        model = random_canonical(None, rng=rng)
        stats = stats_kernel(canonical_entries(model.form, *model.params()))
        rho1, mu1, mu2, mu3, g = stats
        rows.append((k, model.form.value, model.x, model.y, model.u, model.v,
                     mu1, mu2 - mu1 * mu1))
    out = Path(args.out)
    with out.open("w") as fh:
        fh.write(f"# map2fit scan v{__version__} count={args.n} seed={args.seed}\n")
        fh.write("index,form,x,y,u,v,mean,variance\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")
    print(f"wrote {len(rows)} models to {out}")
    if not args.no_plot:
        from . import plots

        figure = out.with_suffix(".png")
        plots.scan_scatter([r[6] for r in rows], [r[7] for r in rows], figure)
        print(f"wrote figure to {figure}")
    return 0


def cmd_compare_reps(args: argparse.Namespace) -> int:
    config = _build_config(args)
    count = args.runs
    rows = []
    failures = 0
    for k in range(count):
        truth = random_redundant(substream(args.seed, STREAM_COMPARE, 3 * k))
        truth_pair = redundant_to_matrices(truth)
        sample = simulate(
            truth_pair, args.n, seed=substream(args.seed, STREAM_COMPARE, 3 * k + 1)
        )
        run_config = dataclasses.replace(
            config, seed=_stream_token(args.seed, STREAM_COMPARE, 3 * k + 2)
        )
        kl_seed = substream(args.seed, STREAM_COMPARE, 3 * k + 2)

        canonical_result = fit(sample, run_config)
        kl_can = empirical_kl(
            truth_pair,
            canonical_to_matrices(canonical_result.model),
            n=args.n,
            runs=_COMPARE_KL_RUNS,
            seed=kl_seed,
        )

        red_failed = False
        kl_red_value = math.nan
        error = ""
        try:
            red_result = ml_fit_redundant(sample, run_config)
            kl_red = empirical_kl(
                truth_pair,
                redundant_to_matrices(red_result.model),
                n=args.n,
                runs=_COMPARE_KL_RUNS,
                seed=kl_seed,
            )
            kl_red_value = kl_red.value
            red_converged = red_result.converged
            if not red_result.converged or not math.isfinite(kl_red.value):
                red_failed = True
        except Map2Error as exc:
            red_failed = True
            red_converged = False
            error = type(exc).__name__
        if red_failed:
            failures += 1

        ratio = kl_red_value / kl_can.value if kl_can.value > 0 else math.nan
        rows.append((k, kl_can.value, kl_red_value, ratio,
                     red_failed, canonical_result.converged, red_converged, error))

    out = Path(args.out)
    with out.open("w") as fh:
        fh.write(
            f"# map2fit compare-reps v{__version__} "
            f"count={count} n={args.n} seed={args.seed} "
            f"kl_runs={_COMPARE_KL_RUNS}\n"
        )
        fh.write("index,kl_canonical,kl_redundant,ratio,"
                 "redundant_failed,canonical_converged,redundant_converged,error\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    finite = [r[3] for r in rows if math.isfinite(r[3])]
    median = float(np.median(finite)) if finite else math.nan
    print(
        f"wrote {len(rows)} comparisons to {out} "
        f"(median ratio {median:.4g}, {failures} redundant failures)"
    )
    if not args.no_plot:
        from . import plots

        figure = out.with_suffix(".png")
        plots.ratio_histogram([r[3] for r in rows], failures, figure)
        print(f"wrote figure to {figure}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="map2fit",
        description="Simulate, analyze and fit two-state Markovian arrival processes.",
    )
    parser.add_argument("--version", action="version", version=f"map2fit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate an interarrival sample from a model")
    p.add_argument("--model", required=True, help="model spec file")
    p.add_argument("--n", type=int, required=True, help="number of arrivals")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", choices=["stationary", "1", "2"], default="stationary",
                   help="initial hidden state rule (default: stationary)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("moments", help="theoretical or sample moments")
    p.add_argument("--model", help="model spec file")
    p.add_argument("--sample", help="sample CSV file")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("fit", help="maximum-likelihood fit of a sample")
    p.add_argument("--sample", required=True, help="sample CSV file")
    p.add_argument("--representation", choices=["canonical", "redundant"],
                   default="canonical")
    p.add_argument("--form", choices=["one", "two", "both"], default="both",
                   help="canonical form(s) to fit (default: both)")
    p.add_argument("--tau", type=float, default=None, help="moments penalty weight")
    p.add_argument("--multistarts", type=int, default=None,
                   help="moments-matching start count")
    p.add_argument("--seed", type=int, default=None, help="pipeline seed")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--reference", help="model file for a divergence check")
    p.add_argument("--runs", type=int, default=100,
                   help="divergence runs for --reference (default 100)")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--plot", action="store_true",
                   help="render a PNG next to --out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("kl", help="empirical divergence between two models")
    p.add_argument("model_a", help="reference model spec file")
    p.add_argument("model_b", help="candidate model spec file")
    p.add_argument("--n", type=int, default=500, help="sequence length (default 500)")
    p.add_argument("--runs", type=int, default=100, help="number of runs (default 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON estimate here (default: stdout)")
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("scan", help="mean/variance of random models, CSV + figure")
    p.add_argument("--n", type=int, required=True, help="number of random models")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser(
        "compare-reps",
        help="canonical vs redundant estimation over random models, CSV + figure",
    )
    p.add_argument("--runs", type=int, required=True, help="number of random models")
    p.add_argument("--n", type=int, default=500,
                   help="sample length per model (default 500)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--multistarts", type=int, default=None)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_compare_reps)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Map2Error as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
