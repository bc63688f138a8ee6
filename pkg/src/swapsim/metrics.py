"""Run metrics and the four CSV families a run writes.

Attainment counts unfulfilled requests in the denominator; throughput counts
every completed request, SLA-violating or not. The summary runtime is
max(run_length, last completion) so tail batches past the window are covered.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .domain import US_PER_S, Request, SlaPolicy, fmt_seconds
from .engine import BatchRec, RunResult

logger = logging.getLogger(__name__)

REQUEST_COLUMNS = [
    "request_id",
    "model",
    "arrival_s",
    "dispatch_s",
    "completion_s",
    "batch_id",
    "batch_size",
    "latency_s",
    "sla_met",
    "fulfilled",
]
BATCH_COLUMNS = [
    "batch_id",
    "model",
    "size",
    "swap_incurred",
    "load_s",
    "start_s",
    "end_s",
    "processing_s",
    "inference_throughput_rps",
]
TIMELINE_COLUMNS = ["start_s", "end_s", "kind", "model"]
SUMMARY_COLUMNS = [
    "strategy",
    "pattern",
    "mean_rps",
    "sla_s",
    "mode",
    "total_requests",
    "fulfilled",
    "attainment_pct",
    "overall_throughput_rps",
    "inference_rate_rps",
    "gpu_util_pct",
    "load_pct",
    "unload_pct",
    "idle_pct",
    "swap_count",
    "runtime_s",
    "seed",
]


@dataclass(slots=True)
class RequestRecord:
    request_id: int
    model: str
    arrival_s: str
    dispatch_s: str
    completion_s: str
    batch_id: Optional[int]
    batch_size: Optional[int]
    latency_s: str
    sla_met: bool
    fulfilled: bool
    latency: Optional[int]  # microseconds, not serialized


@dataclass(frozen=True)
class RunSummary:
    strategy: str
    pattern: str
    mean_rps: float
    sla_s: float
    mode: str
    total_requests: int
    fulfilled: int
    attainment_pct: float
    overall_throughput_rps: float
    inference_rate_rps: float
    gpu_util_pct: float
    load_pct: float
    unload_pct: float
    idle_pct: float
    swap_count: int
    runtime_s: str
    seed: int


def build_request_records(
    requests: Sequence[Request], batches: Sequence[BatchRec], sla: SlaPolicy
) -> list[RequestRecord]:
    sizes = {b.batch_id: b.size for b in batches}
    limit = sla.limit
    records = []
    for req in sorted(requests, key=lambda r: (r.arrival, r.id)):
        completion = req.completion
        if completion is None:
            records.append(
                RequestRecord(req.id, req.model, fmt_seconds(req.arrival), "", "", None,
                              None, "", False, False, None)
            )
            continue
        latency = completion - req.arrival
        records.append(
            RequestRecord(
                req.id,
                req.model,
                fmt_seconds(req.arrival),
                fmt_seconds(req.dispatch),
                fmt_seconds(completion),
                req.batch_id,
                sizes.get(req.batch_id),
                fmt_seconds(latency),
                latency <= limit,
                True,
                latency,
            )
        )
    return records


def attainment(records: Sequence[RequestRecord], sla: SlaPolicy) -> float:
    """Percentage of all requests (fulfilled or not) completed within the SLA."""
    if not records:
        logger.warning("attainment over zero requests; reporting 100%%")
        return 100.0
    met = sum(1 for r in records if r.fulfilled and r.latency <= sla.limit)
    return 100.0 * met / len(records)


def overall_throughput(records: Sequence[RequestRecord], runtime: int) -> float:
    """Completed requests per second of total runtime."""
    if runtime <= 0:
        raise ValueError(f"runtime must be positive, got {runtime}")
    done = sum(1 for r in records if r.fulfilled)
    return done * US_PER_S / runtime


def inference_rate(batches: Sequence[BatchRec]) -> float:
    """Requests per second counted over active inference time only."""
    total_proc = sum(b.proc for b in batches)
    if total_proc == 0:
        return 0.0
    return sum(b.size for b in batches) * US_PER_S / total_proc


def gpu_breakdown(
    timeline: Sequence[tuple[int, int, str, str]]
) -> tuple[float, float, float, float]:
    """(infer, load, unload, idle) percentages of the timeline span."""
    totals = {"infer": 0, "load": 0, "unload": 0, "idle": 0}
    cursor = None
    for start, end, kind, _ in timeline:
        assert cursor is None or start == cursor, "timeline intervals must be contiguous"
        assert end >= start
        totals[kind] += end - start
        cursor = end
    runtime = sum(totals.values())
    if runtime == 0:
        return (0.0, 0.0, 0.0, 100.0)
    return tuple(100.0 * totals[k] / runtime for k in ("infer", "load", "unload", "idle"))


def summarize(
    result: RunResult,
    records: Sequence[RequestRecord],
    sla: SlaPolicy,
    *,
    strategy: str,
    pattern: str,
    mean_rps: float,
    mode: str,
    seed: int,
) -> RunSummary:
    infer_pct, load_pct, unload_pct, idle_pct = gpu_breakdown(result.timeline)
    return RunSummary(
        strategy=strategy,
        pattern=pattern,
        mean_rps=mean_rps,
        sla_s=sla.limit / US_PER_S,
        mode=mode,
        total_requests=len(records),
        fulfilled=sum(1 for r in records if r.fulfilled),
        attainment_pct=attainment(records, sla),
        overall_throughput_rps=overall_throughput(records, result.run_end),
        inference_rate_rps=inference_rate(result.batches),
        gpu_util_pct=infer_pct,
        load_pct=load_pct,
        unload_pct=unload_pct,
        idle_pct=idle_pct,
        swap_count=result.swap_count,
        runtime_s=fmt_seconds(result.run_end),
        seed=seed,
    )


def _bool(value: bool) -> str:
    return "true" if value else "false"


def _num(value: float) -> str:
    return f"{value:.6f}"


def _pct(value: float) -> str:
    return f"{value:.2f}"


def _pct_partition(values: Sequence[float]) -> list[str]:
    """Render percentages that must keep summing to exactly 100.00.

    Independent rounding can drift the sum by up to 0.02; largest-remainder
    rounding pins the rendered sum while staying within 0.01 of each value.
    """
    cents = [math.floor(v * 100) for v in values]
    remainders = [v * 100 - c for v, c in zip(values, cents)]
    deficit = max(0, 10_000 - sum(cents))
    for i in sorted(range(len(values)), key=lambda i: (-remainders[i], i))[:deficit]:
        cents[i] += 1
    return [f"{c // 100}.{c % 100:02d}" for c in cents]


def summary_row(summary: RunSummary) -> list[str]:
    breakdown = _pct_partition(
        [summary.gpu_util_pct, summary.load_pct, summary.unload_pct, summary.idle_pct]
    )
    return [
        summary.strategy,
        summary.pattern,
        _num(summary.mean_rps),
        _num(summary.sla_s),
        summary.mode,
        str(summary.total_requests),
        str(summary.fulfilled),
        _pct(summary.attainment_pct),
        _num(summary.overall_throughput_rps),
        _num(summary.inference_rate_rps),
        *breakdown,
        str(summary.swap_count),
        summary.runtime_s,
        str(summary.seed),
    ]


def write_outputs(
    records: Sequence[RequestRecord],
    batches: Sequence[BatchRec],
    timeline: Sequence[tuple[int, int, str, str]],
    summary: RunSummary,
    out_dir: Path | str,
) -> dict[str, Path]:
    """Write requests/batches/timeline/summary CSVs; returns the file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: out_dir / f"{name}.csv" for name in ("requests", "batches", "timeline", "summary")}

    with open(paths["requests"], "w", newline="") as handle:
        # hand-rolled rows: no quoting needed and the file can run to ~10k rows
        handle.write(",".join(REQUEST_COLUMNS) + "\r\n")
        handle.writelines(
            f"{r.request_id},{r.model},{r.arrival_s},{r.dispatch_s},{r.completion_s},"
            f"{r.batch_id if r.batch_id is not None else ''},"
            f"{r.batch_size if r.batch_size is not None else ''},"
            f"{r.latency_s},{_bool(r.sla_met)},{_bool(r.fulfilled)}\r\n"
            for r in records
        )

    with open(paths["batches"], "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(BATCH_COLUMNS)
        for b in sorted(batches, key=lambda b: b.start):
            writer.writerow(
                [
                    b.batch_id,
                    b.model,
                    b.size,
                    _bool(b.swap_incurred),
                    fmt_seconds(b.load),
                    fmt_seconds(b.start),
                    fmt_seconds(b.end),
                    fmt_seconds(b.proc),
                    _num(b.size * US_PER_S / b.proc),
                ]
            )

    with open(paths["timeline"], "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TIMELINE_COLUMNS)
        for start, end, kind, model in timeline:
            writer.writerow([fmt_seconds(start), fmt_seconds(end), kind, model])

    with open(paths["summary"], "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(summary_row(summary))

    return paths
