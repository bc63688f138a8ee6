"""Command-line entry point: simulate, sweep, gen-traffic, obs, compare.

Exit codes: 0 ok, 2 config/parameter error, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, traffic
from .domain import ConfigError, ParameterError, SchemaError, seconds
from .engine import derive_seed
from .traffic import Pattern


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapsim",
        description="Discrete-event simulator for single-GPU multi-model batch inference "
        "with model swapping under CC/No-CC cost profiles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment cell")
    sim.add_argument("--config", required=True, help="run config JSON")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--mode", default=None, help="override the config mode (cc|nocc)")
    sim.add_argument("--trace", default=None, help="use an arrival trace CSV instead of generating")

    swp = sub.add_parser("sweep", help="run a grid of experiment cells")
    swp.add_argument("--config", default=None, help="sweep config JSON (defaults to the full experiment grid)")
    swp.add_argument("--out", default="sweep_out", help="output directory")
    swp.add_argument("--jobs", type=int, default=1, help="parallel cells")
    swp.add_argument("--seed", type=int, default=None, help="override the sweep base seed")

    gen = sub.add_parser("gen-traffic", help="generate an arrival trace CSV")
    gen.add_argument("--pattern", required=True, help="gamma|bursty|ramp")
    gen.add_argument("--mean", type=float, required=True, help="mean requests/second")
    gen.add_argument("--duration", type=float, default=1200.0, help="trace duration in seconds")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="trace CSV path")
    gen.add_argument("--gamma-shape", type=float, default=traffic.DEFAULT_GAMMA_SHAPE)
    gen.add_argument("--burst-period", type=float, default=120.0, help="seconds")
    gen.add_argument("--burst-duty", type=float, default=traffic.DEFAULT_BURST_DUTY)
    gen.add_argument("--ramp-peak-fraction", type=float, default=traffic.DEFAULT_RAMP_PEAK_FRACTION)
    gen.add_argument(
        "--model-mix",
        default=None,
        help="comma-separated name=weight pairs to assign models to arrivals",
    )

    obs_cmd = sub.add_parser("obs", help="print per-model optimal batch sizes")
    obs_cmd.add_argument("cost_model", help="cost model JSON path (or 'default')")

    cmp_cmd = sub.add_parser("compare", help="CC vs No-CC gaps between two sweep directories")
    cmp_cmd.add_argument("dir_cc", help="directory with CC summary rows")
    cmp_cmd.add_argument("dir_nocc", help="directory with No-CC summary rows")
    cmp_cmd.add_argument("--out", default=None, help="comparison CSV path (default: dir_cc/comparison.csv)")

    return parser


def _cmd_simulate(args) -> int:
    config_path = Path(args.config)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")
    try:
        doc = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{config_path}: invalid JSON ({exc})") from None
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.mode is not None:
        doc["mode"] = args.mode
    if args.trace is not None:
        doc["trace"] = args.trace
    cost_model = harness.resolve_cost_model(doc.get("cost_model", harness.DEFAULT_COST_MODEL))
    config = harness.RunConfig.from_dict(doc, cost_model)
    summary = harness.execute_run(config, args.out, cost_model)
    print(
        f"{summary.strategy} {summary.pattern} mean={summary.mean_rps:g} "
        f"sla={summary.sla_s:g} {summary.mode}: attainment {summary.attainment_pct:.2f}%, "
        f"throughput {summary.overall_throughput_rps:.3f} rps, swaps {summary.swap_count}"
    )
    return 0


def _cmd_sweep(args) -> int:
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"sweep config not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        spec = harness.SweepSpec.from_dict(doc)
    else:
        spec = harness.default_sweep()
    if args.seed is not None:
        spec.base_seed = args.seed
    failures = harness.run_sweep(spec, args.out, jobs=max(1, args.jobs))
    total = len(spec.cells())
    print(f"sweep: {total - len(failures)}/{total} cells ok -> {Path(args.out) / 'sweep_summary.csv'}")
    if failures:
        for name, err in failures:
            print(f"FAILED {name}: {err}", file=sys.stderr)
        return 3
    return 0


def _cmd_gen_traffic(args) -> int:
    pattern = Pattern.parse(args.pattern)
    duration = seconds(args.duration)
    if pattern is Pattern.GAMMA:
        trace = traffic.gen_gamma(args.mean, duration, args.gamma_shape, args.seed)
    elif pattern is Pattern.BURSTY:
        trace = traffic.gen_bursty(
            args.mean, duration, seconds(args.burst_period), args.burst_duty, args.seed
        )
    else:
        trace = traffic.gen_ramp(args.mean, duration, args.ramp_peak_fraction, args.seed)
    if args.model_mix:
        mix = []
        for part in args.model_mix.split(","):
            name, _, weight = part.partition("=")
            if not weight:
                raise ParameterError(f"--model-mix: expected name=weight, got {part!r}")
            mix.append((name.strip(), float(weight)))
        trace = traffic.assign_models(trace, mix, derive_seed(args.seed, "assign"))
    traffic.write_trace(trace, args.out)
    print(f"{len(trace)} arrivals -> {args.out} (realized mean {traffic.realized_mean(trace):.4f} rps)")
    return 0


def _cmd_obs(args) -> int:
    cost_model = harness.resolve_cost_model(args.cost_model)
    for name, best, peak in harness.obs_table(cost_model):
        print(f"{name}: OBS={best}, peak {peak:.1f} rps")
    return 0


def _cmd_compare(args) -> int:
    out = args.out if args.out is not None else Path(args.dir_cc) / "comparison.csv"
    count = harness.compare_modes(args.dir_cc, args.dir_nocc, out)
    print(f"{count} cell pairs -> {out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "gen-traffic": _cmd_gen_traffic,
    "obs": _cmd_obs,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParameterError, SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime fault
        print(f"runtime fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
