import random

import pytest

from swapsim.domain import (
    ExecMode,
    ConfigError,
    ParameterError,
    Request,
    SlaPolicy,
    fmt_seconds,
    latency_of,
    meets_sla,
    seconds,
    to_seconds,
)


def test_latency_simple_subtraction():
    r = Request(0, "m", arrival=0, completion=seconds(21))
    assert latency_of(r) == seconds(21)


def test_latency_degenerate_zero():
    r = Request(0, "m", arrival=seconds(5), completion=seconds(5))
    assert latency_of(r) == 0


def test_latency_unfulfilled_is_none():
    r = Request(0, "m", arrival=seconds(10))
    assert latency_of(r) is None


def test_meets_sla_below_limit():
    r = Request(0, "m", arrival=0, completion=seconds(39.9))
    assert meets_sla(r, SlaPolicy(seconds(40)))


def test_meets_sla_boundary_inclusive():
    r = Request(0, "m", arrival=0, completion=seconds(40))
    assert meets_sla(r, SlaPolicy(seconds(40)))
    r_late = Request(0, "m", arrival=0, completion=seconds(40) + 1)
    assert not meets_sla(r_late, SlaPolicy(seconds(40)))


def test_meets_sla_unfulfilled_never_meets():
    r = Request(0, "m", arrival=seconds(10))
    assert not meets_sla(r, SlaPolicy(seconds(80)))


def test_meets_sla_monotone_in_limit():
    rng = random.Random(0)
    for _ in range(200):
        arrival = rng.randrange(0, seconds(100))
        r = Request(0, "m", arrival=arrival)
        if rng.random() < 0.8:
            r.completion = arrival + rng.randrange(0, seconds(120))
        a = rng.randrange(1, seconds(100))
        b = a + rng.randrange(0, seconds(100))
        if meets_sla(r, SlaPolicy(a)):
            assert meets_sla(r, SlaPolicy(b))


def test_completed_latency_non_negative():
    rng = random.Random(1)
    for _ in range(200):
        arrival = rng.randrange(0, seconds(50))
        r = Request(0, "m", arrival=arrival, completion=arrival + rng.randrange(0, seconds(50)))
        assert latency_of(r) >= 0


def test_sla_requires_positive_limit():
    with pytest.raises(ParameterError):
        SlaPolicy(0)
    with pytest.raises(ParameterError):
        SlaPolicy(-5)


def test_mode_parse():
    assert ExecMode.parse("cc") is ExecMode.CC
    assert ExecMode.parse("NoCC") is ExecMode.NOCC
    with pytest.raises(ConfigError):
        ExecMode.parse("tee")


def test_seconds_round_trip():
    assert seconds(1.5) == 1_500_000
    assert to_seconds(seconds(21.01)) == pytest.approx(21.01)


def test_fmt_seconds_exact_six_decimals():
    assert fmt_seconds(seconds(21.01)) == "21.010000"
    assert fmt_seconds(0) == "0.000000"
    assert fmt_seconds(1) == "0.000001"
    assert fmt_seconds(seconds(1200)) == "1200.000000"
