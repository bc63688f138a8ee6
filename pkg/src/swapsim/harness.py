"""Experiment driver: single runs, grid sweeps, traffic export, comparisons.

A run config (JSON) names the cost model, strategy, traffic spec, SLA, mode,
seed, and run length. A sweep is the Cartesian product over strategies,
patterns, mean rates, SLAs, modes, and seeds; cells run independently (and
optionally in parallel) and their summary rows concatenate, sorted by cell
key, into sweep_summary.csv.

Seeding: every random stream is derived by hashing. Cells that differ only in
strategy, SLA, or mode share the same derived seed, so they see the same
trace and the same load-time draws; that pairs the comparisons the
experiment grid is built for without coupling unrelated cells.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import metrics, traffic
from .domain import ConfigError, ExecMode, SlaPolicy, US_PER_S, seconds
from .engine import derive_seed, run
from .profiles import CostModel, load_cost_model, obs, parse_cost_model, peak_throughput
from .scheduler import Strategy, StrategyKind
from .traffic import ArrivalTrace, Pattern, TrafficSpec

DEFAULT_COST_MODEL = "default"

DEFAULT_STRATEGIES = [k.value for k in StrategyKind]
DEFAULT_PATTERNS = [p.value for p in Pattern]
DEFAULT_MEANS = [2.0, 4.0, 8.0]
DEFAULT_SLAS = [40.0, 60.0, 80.0]
DEFAULT_MODES = [m.value for m in ExecMode]
DEFAULT_SEEDS = [0, 1, 2, 3, 4]


_DEFAULT_CM: list = []


def resolve_cost_model(value: str | Path) -> CostModel:
    """Load a cost model file; the name 'default' means the packaged calibration."""
    if str(value) == DEFAULT_COST_MODEL:
        if not _DEFAULT_CM:
            doc = json.loads(
                resources.files("swapsim").joinpath("data/default_calibration.json").read_text()
            )
            _DEFAULT_CM.append(parse_cost_model(doc))
        return _DEFAULT_CM[0]
    return load_cost_model(value)


def _uniform_mix(cost_model: CostModel) -> tuple[tuple[str, float], ...]:
    names = list(cost_model.models)
    share = 1.0 / len(names)
    return tuple((name, share) for name in names)


def _parse_mix(raw, where: str) -> tuple[tuple[str, float], ...]:
    if isinstance(raw, dict):
        items = list(raw.items())
    elif isinstance(raw, list):
        try:
            items = [(name, float(weight)) for name, weight in raw]
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected pairs of [model, weight]") from None
    else:
        raise ConfigError(f"{where}: expected an object or array of [model, weight]")
    return tuple((str(name), float(weight)) for name, weight in items)


def _traffic_spec(raw: dict, cost_model: CostModel, where: str = "traffic") -> TrafficSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    if "pattern" not in raw:
        raise ConfigError(f"{where}.pattern: missing")
    if "mean_rps" not in raw:
        raise ConfigError(f"{where}.mean_rps: missing")
    params = raw.get("params", {})
    mix = (
        _parse_mix(raw["model_mix"], f"{where}.model_mix")
        if raw.get("model_mix")
        else _uniform_mix(cost_model)
    )
    spec = TrafficSpec(
        pattern=Pattern.parse(str(raw["pattern"])),
        mean_rps=float(raw["mean_rps"]),
        duration=seconds(float(raw.get("duration_s", 1200.0))),
        gamma_shape=float(params.get("gamma_shape", traffic.DEFAULT_GAMMA_SHAPE)),
        burst_period=seconds(float(params.get("burst_period_s", 120.0))),
        burst_duty=float(params.get("burst_duty", traffic.DEFAULT_BURST_DUTY)),
        ramp_peak_fraction=float(
            params.get("ramp_peak_fraction", traffic.DEFAULT_RAMP_PEAK_FRACTION)
        ),
        model_mix=mix,
    )
    spec.validate()
    return spec


def _strategy(kind: str, params: dict) -> Strategy:
    if not isinstance(params, dict):
        raise ConfigError("strategy_params: expected an object")
    return Strategy(
        kind=StrategyKind.parse(kind),
        timer_margin=seconds(float(params.get("timer_margin_s", 1.0))),
        rate_window=seconds(float(params.get("rate_window_s", 60.0))),
        default_rate_rps=float(params.get("default_rate_rps", 1.0)),
        drain_at_end=bool(params.get("drain_at_end", False)),
    )


@dataclass
class RunConfig:
    cost_model_path: str
    strategy: Strategy
    traffic_spec: Optional[TrafficSpec]
    sla: SlaPolicy
    mode: ExecMode
    seed: int
    run_length: int
    trace_path: Optional[str] = None
    seed_label: Optional[int] = None  # reported in summary.csv; defaults to seed

    @classmethod
    def from_dict(cls, doc: dict, cost_model: CostModel) -> "RunConfig":
        for key in ("strategy", "sla_s", "mode"):
            if key not in doc:
                raise ConfigError(f"{key}: missing from run config")
        trace_path = doc.get("trace")
        spec = None
        if trace_path is None:
            if "traffic" not in doc:
                raise ConfigError("traffic: missing from run config (or supply a trace file)")
            spec = _traffic_spec(doc["traffic"], cost_model)
        run_length = seconds(
            float(doc.get("run_length_s", doc.get("traffic", {}).get("duration_s", 1200.0)))
        )
        if run_length <= 0:
            raise ConfigError(f"run_length_s must be positive")
        return cls(
            cost_model_path=str(doc.get("cost_model", DEFAULT_COST_MODEL)),
            strategy=_strategy(str(doc["strategy"]), doc.get("strategy_params", {})),
            traffic_spec=spec,
            sla=SlaPolicy(seconds(float(doc["sla_s"]))),
            mode=ExecMode.parse(str(doc["mode"])),
            seed=int(doc.get("seed", 0)),
            run_length=run_length,
            trace_path=trace_path,
        )

    def to_dict(self) -> dict:
        doc = {
            "cost_model": self.cost_model_path,
            "strategy": self.strategy.kind.value,
            "strategy_params": {
                "timer_margin_s": self.strategy.timer_margin / US_PER_S,
                "rate_window_s": self.strategy.rate_window / US_PER_S,
                "default_rate_rps": self.strategy.default_rate_rps,
                "drain_at_end": self.strategy.drain_at_end,
            },
            "sla_s": self.sla.limit / US_PER_S,
            "mode": self.mode.value,
            "run_length_s": self.run_length / US_PER_S,
            "seed": self.seed,
        }
        if self.trace_path is not None:
            doc["trace"] = self.trace_path
        if self.traffic_spec is not None:
            spec = self.traffic_spec
            params = {}
            if spec.pattern is Pattern.GAMMA:
                params["gamma_shape"] = spec.gamma_shape
            elif spec.pattern is Pattern.BURSTY:
                params["burst_period_s"] = spec.burst_period / US_PER_S
                params["burst_duty"] = spec.burst_duty
            else:
                params["ramp_peak_fraction"] = spec.ramp_peak_fraction
            doc["traffic"] = {
                "pattern": spec.pattern.value,
                "mean_rps": spec.mean_rps,
                "duration_s": spec.duration / US_PER_S,
                "params": params,
                "model_mix": {name: weight for name, weight in spec.model_mix},
            }
        return doc


# Cells differing only in strategy/SLA/mode share a trace; memoize per process.
_TRACE_MEMO: dict = {}


def _trace_for(spec: TrafficSpec, seed: int) -> ArrivalTrace:
    key = (spec, seed)
    trace = _TRACE_MEMO.get(key)
    if trace is None:
        trace = traffic.generate(spec, derive_seed(seed, "traffic"))
        trace = traffic.assign_models(trace, spec.model_mix, derive_seed(seed, "assign"))
        if len(_TRACE_MEMO) > 256:
            _TRACE_MEMO.clear()
        _TRACE_MEMO[key] = trace
    return trace


def execute_run(
    config: RunConfig, out_dir: Path | str, cost_model: Optional[CostModel] = None
) -> metrics.RunSummary:
    """Run one cell end to end and write its four CSVs plus a config echo."""
    if cost_model is None:
        cost_model = resolve_cost_model(config.cost_model_path)
    if config.trace_path is not None:
        trace = traffic.load_trace(config.trace_path, duration=config.run_length)
        pattern = "trace"
        mean = traffic.realized_mean(trace)
    else:
        spec = config.traffic_spec
        trace = _trace_for(spec, config.seed)
        pattern = spec.pattern.value
        mean = spec.mean_rps
    result = run(
        trace,
        cost_model,
        config.strategy,
        config.sla,
        config.mode,
        seed=config.seed,
        run_length=config.run_length,
    )
    records = metrics.build_request_records(result.requests, result.batches, config.sla)
    summary = metrics.summarize(
        result,
        records,
        config.sla,
        strategy=config.strategy.kind.value,
        pattern=pattern,
        mean_rps=mean,
        mode=config.mode.value,
        seed=config.seed_label if config.seed_label is not None else config.seed,
    )
    metrics.write_outputs(records, result.batches, result.timeline, summary, out_dir)
    echo = Path(out_dir) / "config.json"
    echo.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    return summary


@dataclass
class SweepSpec:
    cost_model: str = DEFAULT_COST_MODEL
    strategies: Sequence[str] = field(default_factory=lambda: list(DEFAULT_STRATEGIES))
    patterns: Sequence[str] = field(default_factory=lambda: list(DEFAULT_PATTERNS))
    means: Sequence[float] = field(default_factory=lambda: list(DEFAULT_MEANS))
    slas: Sequence[float] = field(default_factory=lambda: list(DEFAULT_SLAS))
    modes: Sequence[str] = field(default_factory=lambda: list(DEFAULT_MODES))
    seeds: Sequence[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    base_seed: int = 42
    duration_s: float = 1200.0
    run_length_s: Optional[float] = None
    strategy_params: dict = field(default_factory=dict)
    traffic_params: dict = field(default_factory=dict)
    model_mix: Optional[dict] = None

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        spec = cls()
        for key in (
            "cost_model",
            "strategies",
            "patterns",
            "means",
            "slas",
            "modes",
            "seeds",
            "base_seed",
            "duration_s",
            "run_length_s",
            "strategy_params",
            "traffic_params",
            "model_mix",
        ):
            if key in doc:
                setattr(spec, key, doc[key])
        unknown = set(doc) - {
            "cost_model",
            "strategies",
            "patterns",
            "means",
            "slas",
            "modes",
            "seeds",
            "base_seed",
            "duration_s",
            "run_length_s",
            "strategy_params",
            "traffic_params",
            "model_mix",
        }
        if unknown:
            raise ConfigError(f"sweep config: unknown keys {sorted(unknown)}")
        if not (spec.strategies and spec.patterns and spec.means and spec.slas and spec.modes and spec.seeds):
            raise ConfigError("sweep config: every grid dimension must be non-empty")
        return spec

    def cells(self) -> list[dict]:
        out = []
        for strategy in self.strategies:
            for pattern in self.patterns:
                for mean in self.means:
                    for sla in self.slas:
                        for mode in self.modes:
                            for seed in self.seeds:
                                out.append(
                                    {
                                        "strategy": str(strategy),
                                        "pattern": str(pattern),
                                        "mean_rps": float(mean),
                                        "sla_s": float(sla),
                                        "mode": str(mode),
                                        "seed": int(seed),
                                    }
                                )
        return out


def cell_name(cell: dict) -> str:
    return (
        f"{cell['strategy']}__{cell['pattern']}__mean{cell['mean_rps']:g}"
        f"__sla{cell['sla_s']:g}__{cell['mode']}__seed{cell['seed']}"
    )


def cell_run_seed(base_seed: int, cell: dict) -> int:
    """Derived run seed; excludes strategy/SLA/mode so those cells stay paired."""
    return derive_seed(base_seed, cell["pattern"], f"{cell['mean_rps']:g}", cell["seed"])


def _cell_config(spec: SweepSpec, cell: dict, cost_model: CostModel) -> RunConfig:
    traffic_doc = {
        "pattern": cell["pattern"],
        "mean_rps": cell["mean_rps"],
        "duration_s": spec.duration_s,
        "params": spec.traffic_params,
    }
    if spec.model_mix:
        traffic_doc["model_mix"] = spec.model_mix
    run_length = spec.run_length_s if spec.run_length_s is not None else spec.duration_s
    doc = {
        "cost_model": spec.cost_model,
        "strategy": cell["strategy"],
        "strategy_params": spec.strategy_params,
        "traffic": traffic_doc,
        "sla_s": cell["sla_s"],
        "mode": cell["mode"],
        "run_length_s": run_length,
        "seed": cell_run_seed(spec.base_seed, cell),
    }
    config = RunConfig.from_dict(doc, cost_model)
    config.seed_label = cell["seed"]
    return config


def _sweep_cell(payload: tuple) -> tuple[str, Optional[list[str]], Optional[str]]:
    """Worker for one sweep cell; returns (cell name, summary row, error)."""
    spec_doc, cell, out_root = payload
    spec = SweepSpec.from_dict(spec_doc)
    name = cell_name(cell)
    try:
        cost_model = resolve_cost_model(spec.cost_model)
        config = _cell_config(spec, cell, cost_model)
        summary = execute_run(config, Path(out_root) / name, cost_model)
        return name, metrics.summary_row(summary), None
    except Exception as exc:  # recorded per cell; the sweep keeps going
        return name, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, out_dir: Path | str, jobs: int = 1) -> list[tuple[str, str]]:
    """Execute every cell; write per-cell outputs and sweep_summary.csv.

    Returns a list of (cell name, error) for failed cells, empty on success.
    Output is independent of `jobs`: rows are sorted by cell name.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolve_cost_model(spec.cost_model)  # fail fast on config problems
    cells = spec.cells()
    spec_doc = _spec_doc(spec)
    payloads = [(spec_doc, cell, str(out_dir)) for cell in cells]
    if jobs <= 1:
        results = [_sweep_cell(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, payloads, chunksize=8))
    results.sort(key=lambda r: r[0])
    failures = [(name, err) for name, row, err in results if err is not None]
    with open(out_dir / "sweep_summary.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(metrics.SUMMARY_COLUMNS)
        for _, row, err in results:
            if err is None:
                writer.writerow(row)
    return failures


def _spec_doc(spec: SweepSpec) -> dict:
    return {
        "cost_model": spec.cost_model,
        "strategies": list(spec.strategies),
        "patterns": list(spec.patterns),
        "means": list(spec.means),
        "slas": list(spec.slas),
        "modes": list(spec.modes),
        "seeds": list(spec.seeds),
        "base_seed": spec.base_seed,
        "duration_s": spec.duration_s,
        "run_length_s": spec.run_length_s,
        "strategy_params": dict(spec.strategy_params),
        "traffic_params": dict(spec.traffic_params),
        "model_mix": dict(spec.model_mix) if spec.model_mix else None,
    }


def default_sweep() -> SweepSpec:
    """The full grid: 4 strategies x 3 patterns x {2,4,8} rps x {40,60,80} s x 2 modes."""
    return SweepSpec()


def obs_table(cost_model: CostModel) -> list[tuple[str, int, float]]:
    return [
        (name, obs(costs.curve), peak_throughput(costs.curve))
        for name, costs in cost_model.models.items()
    ]


def _read_summary_rows(path: Path) -> list[dict]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def _find_summary(dir_path: Path) -> Path:
    for name in ("sweep_summary.csv", "summary.csv"):
        candidate = dir_path / name
        if candidate.exists():
            return candidate
    raise ConfigError(f"{dir_path}: no sweep_summary.csv or summary.csv found")


def _mean_latency_s(cell_dir: Path) -> Optional[float]:
    requests_csv = cell_dir / "requests.csv"
    if not requests_csv.exists():
        return None
    total = 0.0
    count = 0
    with open(requests_csv, newline="") as handle:
        for row in csv.DictReader(handle):
            if row["fulfilled"] == "true":
                total += float(row["latency_s"])
                count += 1
    return total / count if count else None


COMPARISON_COLUMNS = [
    "strategy",
    "pattern",
    "mean_rps",
    "sla_s",
    "seed",
    "latency_gap_pct",
    "attainment_gap_pp",
    "throughput_gap_pct",
    "util_gap_pct",
]


def compare_modes(dir_cc: Path | str, dir_nocc: Path | str, out_path: Path | str) -> int:
    """Write per-cell CC vs No-CC gaps; returns the number of compared cells.

    Each directory must hold a summary CSV; CC rows are taken from the first,
    No-CC rows from the second (the same sweep directory can serve as both).
    """
    dir_cc, dir_nocc = Path(dir_cc), Path(dir_nocc)
    cc_rows = [r for r in _read_summary_rows(_find_summary(dir_cc)) if r["mode"] == "cc"]
    nocc_rows = [r for r in _read_summary_rows(_find_summary(dir_nocc)) if r["mode"] == "nocc"]

    def key(row):
        return (row["strategy"], row["pattern"], row["mean_rps"], row["sla_s"], row["seed"])

    cc_by_key = {key(r): r for r in cc_rows}
    nocc_by_key = {key(r): r for r in nocc_rows}
    if not cc_by_key:
        raise ConfigError(f"{dir_cc}: no CC rows in summary")
    if set(cc_by_key) != set(nocc_by_key):
        missing = set(cc_by_key) ^ set(nocc_by_key)
        raise ConfigError(f"cell keys do not match between the two summaries: {sorted(missing)[:5]}")

    out_rows = []
    for k in sorted(cc_by_key):
        cc, nocc = cc_by_key[k], nocc_by_key[k]
        cell = {
            "strategy": cc["strategy"],
            "pattern": cc["pattern"],
            "mean_rps": float(cc["mean_rps"]),
            "sla_s": float(cc["sla_s"]),
            "seed": int(cc["seed"]),
        }
        lat_cc = _mean_latency_s(dir_cc / cell_name({**cell, "mode": "cc"}))
        lat_nocc = _mean_latency_s(dir_nocc / cell_name({**cell, "mode": "nocc"}))
        if lat_cc and lat_nocc and lat_cc > 0:
            latency_gap = f"{100.0 * (lat_cc - lat_nocc) / lat_cc:.2f}"
        else:
            latency_gap = ""
        attainment_gap = f"{float(nocc['attainment_pct']) - float(cc['attainment_pct']):.2f}"
        thr_cc = float(cc["overall_throughput_rps"])
        thr_nocc = float(nocc["overall_throughput_rps"])
        throughput_gap = f"{100.0 * (thr_nocc - thr_cc) / thr_cc:.2f}" if thr_cc > 0 else ""
        util_cc = float(cc["gpu_util_pct"])
        util_nocc = float(nocc["gpu_util_pct"])
        util_gap = f"{100.0 * (util_nocc - util_cc) / util_cc:.2f}" if util_cc > 0 else ""
        out_rows.append(
            [
                cc["strategy"],
                cc["pattern"],
                cc["mean_rps"],
                cc["sla_s"],
                cc["seed"],
                latency_gap,
                attainment_gap,
                throughput_gap,
                util_gap,
            ]
        )
    with open(out_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COMPARISON_COLUMNS)
        writer.writerows(out_rows)
    return len(out_rows)
