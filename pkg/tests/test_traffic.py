import statistics

import pytest

from swapsim.domain import ParameterError, US_PER_S, seconds
from swapsim.traffic import (
    ArrivalTrace,
    Pattern,
    TrafficSpec,
    assign_models,
    gen_bursty,
    gen_gamma,
    gen_ramp,
    generate,
    load_trace,
    realized_mean,
    write_trace,
)

DUR = seconds(1200)


def test_gamma_scale_gives_mean_gap():
    # shape 0.5 at 4 rps -> scale 0.5 s, so the mean gap must be 0.25 s
    trace = gen_gamma(4.0, DUR, shape=0.5, seed=1)
    gaps = [b - a for (a, _), (b, _) in zip(trace.arrivals, trace.arrivals[1:])]
    assert statistics.fmean(gaps) / US_PER_S == pytest.approx(0.25, rel=0.05)


def test_gamma_seed_averaged_count():
    counts = [len(gen_gamma(4.0, DUR, 0.5, seed)) for seed in range(20)]
    assert statistics.fmean(counts) == pytest.approx(4800, rel=0.05)


def test_gamma_huge_shape_is_near_deterministic():
    trace = gen_gamma(1.0, DUR, shape=1e6, seed=3)
    assert abs(len(trace) - 1200) <= 1
    gaps = [b - a for (a, _), (b, _) in zip(trace.arrivals, trace.arrivals[1:])]
    assert min(gaps) / US_PER_S > 0.99
    assert max(gaps) / US_PER_S < 1.01


def test_gamma_rejects_bad_params():
    with pytest.raises(ParameterError):
        gen_gamma(0.0, DUR, 0.5, 1)
    with pytest.raises(ParameterError):
        gen_gamma(4.0, DUR, -1.0, 1)


def test_bursty_inburst_rate_and_membership():
    period, duty = seconds(120), 0.25
    trace = gen_bursty(4.0, DUR, period, duty, seed=2)
    burst_len = duty * period
    for arrival, _ in trace.arrivals:
        assert arrival % period < burst_len, "arrival inside an idle sub-window"
    # in-burst rate = mean/duty = 16 rps over the burst time actually covered
    burst_time_s = (DUR // period) * burst_len / US_PER_S
    assert len(trace) / burst_time_s == pytest.approx(16.0, rel=0.1)


def test_bursty_duty_one_is_homogeneous():
    counts = [len(gen_bursty(4.0, DUR, seconds(120), 1.0, seed)) for seed in range(20)]
    assert statistics.fmean(counts) == pytest.approx(4800, rel=0.05)


def test_bursty_expected_count():
    counts = [len(gen_bursty(4.0, DUR, seconds(120), 0.25, seed)) for seed in range(20)]
    assert statistics.fmean(counts) == pytest.approx(4800, rel=0.05)


def test_bursty_rejects_bad_params():
    with pytest.raises(ParameterError):
        gen_bursty(4.0, DUR, seconds(120), 0.0, 1)
    with pytest.raises(ParameterError):
        gen_bursty(4.0, DUR, seconds(120), 1.5, 1)
    with pytest.raises(ParameterError):
        gen_bursty(4.0, DUR, 0, 0.25, 1)


def test_ramp_seed_averaged_count():
    counts = [len(gen_ramp(4.0, DUR, 0.5, seed)) for seed in range(20)]
    assert statistics.fmean(counts) == pytest.approx(4800, rel=0.05)


def test_ramp_histogram_peaks_at_peak_fraction():
    peak_fraction = 0.5
    bins = [0] * 10
    for seed in range(20):
        trace = gen_ramp(4.0, DUR, peak_fraction, seed)
        for arrival, _ in trace.arrivals:
            bins[min(9, arrival * 10 // DUR)] += 1
    mode_bin = bins.index(max(bins))
    peak_bin = int(peak_fraction * 10)
    assert mode_bin in (peak_bin - 1, peak_bin), f"histogram {bins}"
    # unimodal: rises to the mode, falls after
    assert all(bins[i] <= bins[i + 1] for i in range(mode_bin))
    assert all(bins[i] >= bins[i + 1] for i in range(mode_bin, 9))


def test_ramp_rejects_bad_peak_fraction():
    with pytest.raises(ParameterError):
        gen_ramp(4.0, DUR, 0.0, 1)
    with pytest.raises(ParameterError):
        gen_ramp(4.0, DUR, 1.0, 1)


def test_assign_point_mass():
    trace = gen_gamma(2.0, DUR, 0.5, 5)
    assigned = assign_models(trace, [("a", 1.0)], 6)
    assert all(m == "a" for _, m in assigned.arrivals)


def test_assign_even_split_concentration():
    trace = gen_gamma(10.0, seconds(1000), 1.0, 7)  # ~10000 arrivals
    assigned = assign_models(trace, [("a", 0.5), ("b", 0.5)], 8)
    share = sum(1 for _, m in assigned.arrivals if m == "a") / len(assigned)
    assert abs(share - 0.5) <= 0.02


def test_assign_deterministic():
    trace = gen_gamma(4.0, DUR, 0.5, 9)
    mix = [("a", 0.3), ("b", 0.7)]
    assert assign_models(trace, mix, 10) == assign_models(trace, mix, 10)


def test_assign_rejects_empty_or_bad_mix():
    trace = gen_gamma(4.0, DUR, 0.5, 9)
    with pytest.raises(ParameterError):
        assign_models(trace, [], 1)
    with pytest.raises(ParameterError):
        assign_models(trace, [("a", 0.5), ("b", 0.6)], 1)


def test_realized_mean_division():
    trace = ArrivalTrace(tuple((i * 250_000, "a") for i in range(4800)), DUR)
    assert realized_mean(trace) == pytest.approx(4.0)


def test_realized_mean_empty():
    assert realized_mean(ArrivalTrace((), DUR)) == 0.0


def test_realized_mean_bursty_over_seeds():
    means = [
        realized_mean(gen_bursty(2.0, DUR, seconds(120), 0.25, seed)) for seed in range(50)
    ]
    assert statistics.fmean(means) == pytest.approx(2.0, abs=0.1)


def test_traces_sorted_and_inside_duration():
    for gen in (
        lambda s: gen_gamma(4.0, DUR, 0.5, s),
        lambda s: gen_bursty(4.0, DUR, seconds(120), 0.25, s),
        lambda s: gen_ramp(4.0, DUR, 0.5, s),
    ):
        trace = gen(11)
        times = [a for a, _ in trace.arrivals]
        assert times == sorted(times)
        assert all(0 <= t < DUR for t in times)


def test_generation_deterministic():
    spec = TrafficSpec(Pattern.BURSTY, 4.0, DUR, model_mix=(("a", 0.5), ("b", 0.5)))
    assert generate(spec, 13) == generate(spec, 13)
    assert generate(spec, 13) != generate(spec, 14)


def test_trace_csv_round_trip(tmp_path):
    trace = assign_models(gen_gamma(4.0, DUR, 0.5, 15), [("a", 0.4), ("b", 0.6)], 16)
    path = tmp_path / "trace.csv"
    write_trace(trace, path)
    loaded = load_trace(path, duration=DUR)
    assert loaded.arrivals == trace.arrivals
    path2 = tmp_path / "trace2.csv"
    write_trace(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_load_trace_rejects_unsorted(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("arrival_s,model\n2.0,a\n1.0,a\n")
    with pytest.raises(ParameterError):
        load_trace(path)
