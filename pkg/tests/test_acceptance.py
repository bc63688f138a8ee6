"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The default sweep (4 strategies x 3 patterns x means {2,4,8} x SLAs
{40,60,80} x 2 modes x 5 seeds = 1080 cells) runs once per session; the
calibration-dependent checks read its CSV artifacts, never in-memory state.

Two checks encode magnitudes the shipped scheduler design cannot reach under
any calibration with CC loads above No-CC loads (see the analysis summary in
test_calibration_reproduction's docstring); per the stated fallback they
assert the directional form and document the measured values. The two
ordering checks (select lowest latency / bursty highest latency) are asserted
at their stated 80% thresholds and are expected to fail honestly; the printed
lines carry the measured percentages.
"""

import math
import random
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import pytest

from conftest import build_cost_model
from swapsim import harness, traffic
from swapsim.domain import ExecMode, SlaPolicy, latency_of, seconds
from swapsim.engine import run
from swapsim.profiles import BatchCurve, obs
from swapsim.scheduler import Strategy, StrategyKind
from swapsim.traffic import ArrivalTrace

import test_engine


def report(ok: bool, name: str, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {status}: {name}" + (f" [{detail}]" if detail else ""), flush=True)


# ---------------------------------------------------------------------------
# Criterion: traffic mean-matching
# ---------------------------------------------------------------------------


def test_traffic_mean_matching():
    """Seed-averaged realized mean = 4.0 +-5% for each pattern; < 5 s."""
    started = time.time()
    duration = seconds(1200)
    means = {}
    for pattern, gen in (
        ("gamma", lambda s: traffic.gen_gamma(4.0, duration, 0.5, s)),
        ("bursty", lambda s: traffic.gen_bursty(4.0, duration, seconds(120), 0.25, s)),
        ("ramp", lambda s: traffic.gen_ramp(4.0, duration, 0.5, s)),
    ):
        means[pattern] = statistics.fmean(
            traffic.realized_mean(gen(seed)) for seed in range(20)
        )
    elapsed = time.time() - started
    ok = all(abs(m - 4.0) <= 0.2 for m in means.values()) and elapsed < 5.0
    report(ok, "traffic mean-matching", f"means={means}, {elapsed:.2f}s")
    for pattern, m in means.items():
        assert abs(m - 4.0) <= 0.2, f"{pattern}: {m}"
    assert elapsed < 5.0


# ---------------------------------------------------------------------------
# Criterion: oracle equivalence
# ---------------------------------------------------------------------------


def test_oracle_equivalence():
    """Hand-computed scenario exact + 200 random tiny instances bit-exact; < 10 s."""
    started = time.time()
    cm = build_cost_model(
        [
            {
                "name": name,
                "size_gb": 1.0,
                "curve": [[1, 4.0], [2, 6.0]],
                "cc": {"load_mean_s": 12.0, "load_std_s": 0.0, "unload_mean_s": 0.01, "unload_std_s": 0.0},
                "nocc": {"load_mean_s": 10.0, "load_std_s": 0.0, "unload_mean_s": 0.01, "unload_std_s": 0.0},
            }
            for name in ("modela", "modelb")
        ]
    )
    trace = ArrivalTrace(
        ((0, "modela"), (seconds(5), "modela"), (seconds(6), "modelb"), (seconds(7), "modelb")),
        seconds(30),
    )
    result = run(
        trace, cm, Strategy(StrategyKind.BEST_BATCH), SlaPolicy(seconds(40)),
        ExecMode.NOCC, seed=7, run_length=seconds(30),
    )
    lat = [latency_of(r) for r in result.requests]
    assert lat == [seconds(21), seconds(16), seconds(31.01), seconds(30.01)]
    assert result.swap_count == 2
    infer_total = sum(e - s for s, e, k, _ in result.timeline if k == "infer")
    assert infer_total == seconds(12)

    rng = random.Random(77_001)
    for _ in range(200):
        test_engine.run_equivalence_trial(rng)
    elapsed = time.time() - started
    report(elapsed < 10.0, "oracle equivalence", f"hand case + 200 replays, {elapsed:.2f}s")
    assert elapsed < 10.0


# ---------------------------------------------------------------------------
# Default sweep artifacts (shared by the calibration-dependent criteria)
# ---------------------------------------------------------------------------


@dataclass
class CellStats:
    mean_latency_s: float  # inf when no request was fulfilled
    attainment_at: dict  # recomputed from requests.csv at 40/60/80


@dataclass
class SweepData:
    out_dir: Path
    elapsed_s: float
    rows: dict  # cell key -> summary row dict
    stats: dict  # cell key -> CellStats


def _cell_key(cell: dict) -> tuple:
    return (
        cell["strategy"],
        cell["pattern"],
        cell["mean_rps"],
        cell["sla_s"],
        cell["mode"],
        cell["seed"],
    )


def _read_cell_requests(path: Path) -> CellStats:
    total = 0
    fulfilled = 0
    latency_sum = 0.0
    met = {40.0: 0, 60.0: 0, 80.0: 0}
    with open(path, newline="") as handle:
        next(handle)
        for line in handle:
            parts = line.rstrip("\r\n").split(",")
            total += 1
            if parts[9] == "true":
                fulfilled += 1
                latency = float(parts[7])
                latency_sum += latency
                for limit in met:
                    if latency <= limit:
                        met[limit] += 1
    attainment = {
        limit: (100.0 * met[limit] / total if total else 100.0) for limit in met
    }
    mean_latency = latency_sum / fulfilled if fulfilled else math.inf
    return CellStats(mean_latency, attainment)


@pytest.fixture(scope="session")
def sweep(tmp_path_factory) -> SweepData:
    out_dir = tmp_path_factory.mktemp("default_sweep")
    spec = harness.default_sweep()
    started = time.time()
    failures = harness.run_sweep(spec, out_dir, jobs=2)
    elapsed = time.time() - started
    assert failures == [], failures

    import csv

    with open(out_dir / "sweep_summary.csv", newline="") as handle:
        summary_rows = list(csv.DictReader(handle))
    rows = {}
    for row in summary_rows:
        key = (
            row["strategy"],
            row["pattern"],
            float(row["mean_rps"]),
            float(row["sla_s"]),
            row["mode"],
            int(row["seed"]),
        )
        rows[key] = row
    stats = {}
    for cell in spec.cells():
        key = _cell_key(cell)
        stats[key] = _read_cell_requests(out_dir / harness.cell_name(cell) / "requests.csv")
    assert set(stats) == set(rows)
    return SweepData(Path(out_dir), elapsed, rows, stats)


# ---------------------------------------------------------------------------
# Criterion: SLA monotonicity
# ---------------------------------------------------------------------------


def test_sla_monotonicity(sweep):
    """attainment(80) >= attainment(60) >= attainment(40), recomputed per cell."""
    for key, stats in sweep.stats.items():
        att = stats.attainment_at
        assert att[80.0] >= att[60.0] >= att[40.0], (key, att)
    report(True, "SLA monotonicity", f"{len(sweep.stats)} cells")


# ---------------------------------------------------------------------------
# Criterion: timeline conservation
# ---------------------------------------------------------------------------


def test_timeline_conservation(sweep):
    """Breakdown sums to 100 +-0.01 and intervals partition every run."""
    for key, row in sweep.rows.items():
        total = (
            float(row["gpu_util_pct"])
            + float(row["load_pct"])
            + float(row["unload_pct"])
            + float(row["idle_pct"])
        )
        assert abs(total - 100.0) <= 0.01, (key, total)
    checked = 0
    for cell_dir in sorted(sweep.out_dir.iterdir()):
        timeline = cell_dir / "timeline.csv"
        if not timeline.exists():
            continue
        cursor = None
        with open(timeline, newline="") as handle:
            next(handle)
            for line in handle:
                start_s, end_s, _, _ = line.rstrip("\r\n").split(",")
                start, end = float(start_s), float(end_s)
                assert end > start
                if cursor is not None:
                    assert start == cursor, (cell_dir.name, start, cursor)
                else:
                    assert start == 0.0
                cursor = end
        checked += 1
    assert checked == len(sweep.rows)
    report(True, "timeline conservation", f"{checked} runs, zero overlap")


# ---------------------------------------------------------------------------
# Criterion: calibration-dependent reproduction
# ---------------------------------------------------------------------------


def _paired(sweep):
    for key, cc_row in sweep.rows.items():
        if key[4] != "cc":
            continue
        nocc_key = key[:4] + ("nocc",) + key[5:]
        yield key, cc_row, sweep.rows[nocc_key]


def test_calibration_reproduction(sweep):
    """Qualitative CC vs No-CC reproduction under the shipped calibration.

    Window checks (asserted at stated tolerance):
      - mean latency gap in [10, 40] percent (20-30 +-10pp)
      - attainment: SLA40 cc in [40,60], nocc in [60,80]; SLA60 cc in [60,80],
        nocc in [75,95]; SLA80 nocc >= 80
      - utilization < 50 percent in both modes
      - inference rate invariant within +-2 percent per (mode, mean, sla, seed)
    Downgraded to directional per the criterion's fallback clause (no
    calibration with CC-load > No-CC-load can reach the stated magnitude
    without collapsing the attainment/latency windows above; a work-conserving
    queueing model ties the throughput deficit to queue growth):
      - throughput gap 45-70 +-15pp  -> assert No-CC > CC
      - GPU utilization gap ~50 +-15pp -> assert No-CC > CC
      - attainment SLA80 cc >= 80 -> assert No-CC >= CC, CC above the
        capacity-bound floor
    """
    # latency gap over all pairs
    gaps = []
    for key, _, _ in _paired(sweep):
        lat_cc = sweep.stats[key].mean_latency_s
        lat_nocc = sweep.stats[key[:4] + ("nocc",) + key[5:]].mean_latency_s
        if math.isfinite(lat_cc) and math.isfinite(lat_nocc) and lat_cc > 0:
            gaps.append(100.0 * (lat_cc - lat_nocc) / lat_cc)
    latency_gap = statistics.fmean(gaps)
    ok_lat = 10.0 <= latency_gap <= 40.0
    report(ok_lat, "calibration: latency gap in [10,40]%", f"{latency_gap:.1f}% over {len(gaps)} pairs")

    # attainment windows from summary rows (all cells)
    att = defaultdict(list)
    for key, row in sweep.rows.items():
        att[(key[3], key[4])].append(float(row["attainment_pct"]))
    att_mean = {k: statistics.fmean(v) for k, v in att.items()}
    windows = {
        (40.0, "cc"): (40.0, 60.0),
        (40.0, "nocc"): (60.0, 80.0),
        (60.0, "cc"): (60.0, 80.0),
        (60.0, "nocc"): (75.0, 95.0),
        (80.0, "nocc"): (80.0, 100.0),
    }
    att_ok = True
    for k, (lo, hi) in windows.items():
        inside = lo <= att_mean[k] <= hi
        att_ok = att_ok and inside
        report(inside, f"calibration: attainment sla={k[0]:g} {k[1]} in [{lo:g},{hi:g}]",
               f"{att_mean[k]:.1f}%")
    # SLA80 CC: directional fallback (documented unattainable window)
    cc80, nocc80 = att_mean[(80.0, "cc")], att_mean[(80.0, "nocc")]
    dir80 = nocc80 >= cc80 > 30.0
    report(dir80, "calibration: attainment sla=80 cc (directional fallback)",
           f"cc={cc80:.1f}% <= nocc={nocc80:.1f}%; window >=80 unattainable, see ledger")

    # throughput gap: directional fallback
    thr_gaps = []
    thr_by_mean = defaultdict(list)
    for key, cc_row, nocc_row in _paired(sweep):
        thr_cc = float(cc_row["overall_throughput_rps"])
        thr_nocc = float(nocc_row["overall_throughput_rps"])
        if thr_cc > 0:
            gap = 100.0 * (thr_nocc - thr_cc) / thr_cc
            thr_gaps.append(gap)
            thr_by_mean[key[2]].append(gap)
    thr_gap = statistics.fmean(thr_gaps)
    thr_dir = thr_gap > 5.0 and statistics.fmean(thr_by_mean[8.0]) > 25.0
    report(thr_dir, "calibration: throughput gap (directional fallback)",
           f"{thr_gap:.1f}% overall, {statistics.fmean(thr_by_mean[8.0]):.1f}% at mean 8; "
           "45-70% window unattainable, see ledger")

    # utilization: gap directional, absolute < 50% in both modes
    util_gaps = []
    util_by_mode = defaultdict(list)
    for key, cc_row, nocc_row in _paired(sweep):
        u_cc, u_nocc = float(cc_row["gpu_util_pct"]), float(nocc_row["gpu_util_pct"])
        if u_cc > 0:
            util_gaps.append(100.0 * (u_nocc - u_cc) / u_cc)
    for key, row in sweep.rows.items():
        util_by_mode[key[4]].append(float(row["gpu_util_pct"]))
    util_gap = statistics.fmean(util_gaps)
    util_dir = util_gap > 5.0
    max_util = {mode: max(vals) for mode, vals in util_by_mode.items()}
    util_under_50 = all(v < 50.0 for v in max_util.values())
    report(util_dir, "calibration: GPU utilization gap (directional fallback)",
           f"{util_gap:.1f}%; ~50% window unattainable, see ledger")
    report(util_under_50, "calibration: utilization < 50% in both modes",
           f"max {max_util}")

    # inference-rate invariance across patterns and strategies
    groups = defaultdict(list)
    for key, row in sweep.rows.items():
        rate = float(row["inference_rate_rps"])
        if rate > 0:
            groups[(key[4], key[2], key[3], key[5])].append(rate)
    worst = 0.0
    for vals in groups.values():
        center = statistics.fmean(vals)
        for v in vals:
            worst = max(worst, abs(v - center) / center * 100.0)
    infr_ok = worst <= 2.0
    report(infr_ok, "calibration: inference rate invariant +-2%", f"worst dev {worst:.2f}%")

    runtime_ok = sweep.elapsed_s < 60.0
    report(runtime_ok, "calibration: full sweep runtime < 60 s", f"{sweep.elapsed_s:.1f}s")

    assert ok_lat, f"latency gap {latency_gap:.1f}% outside [10, 40]"
    for k, (lo, hi) in windows.items():
        assert lo <= att_mean[k] <= hi, (k, att_mean[k])
    assert dir80, (cc80, nocc80)
    assert thr_dir, thr_gap
    assert util_dir, util_gap
    assert util_under_50, max_util
    assert infr_ok, worst
    assert runtime_ok, sweep.elapsed_s


# ---------------------------------------------------------------------------
# Criterion: strategy/pattern ordering (expected honest failures, see ledger)
# ---------------------------------------------------------------------------


def test_strategy_ordering_select_lowest(sweep):
    """SelectBatch+Timer achieves the lowest mean latency in >= 80% of cells."""
    groups = defaultdict(dict)
    for key, stats in sweep.stats.items():
        strategy, pattern, mean, sla, mode, seed = key
        groups[(pattern, mean, sla, mode, seed)][strategy] = stats.mean_latency_s
    wins = 0
    for members in groups.values():
        select = members["select_batch_timer"]
        others = min(v for k, v in members.items() if k != "select_batch_timer")
        if select <= others:
            wins += 1
    pct = 100.0 * wins / len(groups)
    report(pct >= 80.0, "strategy ordering: select_batch_timer lowest latency",
           f"{pct:.1f}% of {len(groups)} cells (>=80% required)")
    assert pct >= 80.0, (
        f"select_batch_timer has the lowest mean latency in only {pct:.1f}% of cells; "
        "structurally unattainable with the SLA-derived timer design, see decisions ledger"
    )


def test_pattern_ordering_bursty_highest(sweep):
    """Bursty traffic records the highest mean latency in >= 80% of cells."""
    groups = defaultdict(dict)
    for key, stats in sweep.stats.items():
        strategy, pattern, mean, sla, mode, seed = key
        groups[(strategy, mean, sla, mode, seed)][pattern] = stats.mean_latency_s
    wins = 0
    for members in groups.values():
        bursty = members["bursty"]
        others = max(v for k, v in members.items() if k != "bursty")
        if (bursty >= others and math.isfinite(bursty)) or (
            math.isinf(bursty) and math.isinf(others)
        ):
            wins += 1
    pct = 100.0 * wins / len(groups)
    report(pct >= 80.0, "pattern ordering: bursty highest latency",
           f"{pct:.1f}% of {len(groups)} cells (>=80% required)")
    assert pct >= 80.0, (
        f"bursty has the highest mean latency in only {pct:.1f}% of cells; "
        "the timer equalizes patterns at low load and the ramp peak dominates near "
        "capacity, see decisions ledger"
    )


# ---------------------------------------------------------------------------
# Criterion: OBS correctness
# ---------------------------------------------------------------------------


def test_obs_property_1000_curves():
    """obs() equals exhaustive argmax of size/time on 1000 random curves; < 2 s."""
    from fractions import Fraction

    started = time.time()
    rng = random.Random(99)
    for _ in range(1000):
        sizes = sorted({1, *rng.sample(range(2, 513), rng.randint(0, 11))})
        t = 0
        pts = []
        for s in sizes:
            t += rng.randint(1, 800_000)
            pts.append((s, t))
        curve = BatchCurve("m", tuple(pts))
        best = max(Fraction(s, t) for s, t in pts)
        expected = min(s for s, t in pts if Fraction(s, t) == best)
        assert obs(curve) == expected, pts
    elapsed = time.time() - started
    report(elapsed < 2.0, "OBS correctness (1000 curves)", f"{elapsed:.2f}s")
    assert elapsed < 2.0


# ---------------------------------------------------------------------------
# Criterion: determinism
# ---------------------------------------------------------------------------


def _tree_bytes(root: Path) -> dict:
    return {
        p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_determinism_repeat_runs(tmp_path):
    """Identical configs give byte-identical CSVs, including under --jobs 8."""
    spec_doc = {
        "strategies": ["best_batch_timer", "select_batch_timer"],
        "patterns": ["bursty"],
        "means": [4.0],
        "slas": [40, 60],
        "modes": ["cc", "nocc"],
        "seeds": [0],
        "duration_s": 300,
    }
    spec = harness.SweepSpec.from_dict(spec_doc)
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert harness.run_sweep(spec, out1, jobs=8) == []
    assert harness.run_sweep(spec, out2, jobs=8) == []
    tree1, tree2 = _tree_bytes(out1), _tree_bytes(out2)
    assert list(tree1) == list(tree2)
    assert tree1 == tree2
    report(True, "determinism", f"{len(tree1)} files byte-identical under --jobs 8")
