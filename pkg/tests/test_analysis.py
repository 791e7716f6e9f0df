import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacersim.analysis import (
    PacketLogEntry,
    TrainStats,
    extract_trains,
    inter_packet_gaps,
    packets_per_train_cdf,
    precision,
    summarize_repetitions,
)
from pacersim.engine import MS


def entries(times_ns, intended=None):
    intended = intended or [None] * len(times_ns)
    return [
        PacketLogEntry(packet_number=i, size=1500, intended_tx_time=it, departure_time=t)
        for i, (t, it) in enumerate(zip(times_ns, intended))
    ]


def brute_force_train_lengths(times, threshold):
    """Quadratic reference splitter: walk each packet, close train when gap >= threshold."""
    lengths = []
    i = 0
    while i < len(times):
        j = i
        while j + 1 < len(times) and times[j + 1] - times[j] < threshold:
            j += 1
        lengths.append(j - i + 1)
        i = j + 1
    return lengths


def test_extract_trains_example():
    times = [0, 50_000, 200_000, 250_000, 300_000, 1_000_000]  # 0/0.05/0.2/0.25/0.3/1.0 ms
    stats = extract_trains(entries(times), threshold=MS // 10)
    assert sorted(stats.train_lengths) == [1, 2, 3]


def test_single_packet_is_a_train_of_one():
    stats = extract_trains(entries([5]), threshold=MS // 10)
    assert stats.train_lengths == [1]


def test_gap_equal_to_threshold_splits_trains():
    times = [0, 100_000, 200_000]
    stats = extract_trains(entries(times), threshold=100_000)
    assert stats.train_lengths == [1, 1, 1]
    inclusive = extract_trains(entries(times), threshold=100_000, inclusive=True)
    assert inclusive.train_lengths == [3]


def test_extract_trains_empty_log():
    assert extract_trains([]).train_lengths == []


def test_extract_trains_matches_brute_force_on_random_logs():
    rng = random.Random(7)
    for _ in range(1000):
        n = rng.randrange(1, 60)
        times = sorted(rng.randrange(0, 4_000_000) for _ in range(n))
        threshold = rng.choice([50_000, 100_000, 250_000])
        got = extract_trains(entries(times), threshold=threshold).train_lengths
        assert got == brute_force_train_lengths(times, threshold)


def test_packets_per_train_cdf_example():
    stats = TrainStats(threshold=MS // 10, train_lengths=[2, 3, 1])
    cdf = dict(packets_per_train_cdf(stats))
    assert cdf[1] == pytest.approx(1 / 6)
    assert cdf[2] == pytest.approx(3 / 6)
    assert cdf[3] == pytest.approx(1.0)


def test_cdf_all_singletons_and_final_value():
    stats = TrainStats(threshold=MS // 10, train_lengths=[1] * 9)
    cdf = packets_per_train_cdf(stats)
    assert cdf == [(1, 1.0)]


def test_cdf_17_train_among_singletons():
    stats = TrainStats(threshold=MS // 10, train_lengths=[17] + [1] * 26)  # 43 packets
    cdf = dict(packets_per_train_cdf(stats))
    assert cdf[1] == pytest.approx(26 / 43)
    assert cdf[17] == pytest.approx(1.0)
    assert cdf[17] - cdf[1] == pytest.approx(17 / 43)


def test_cdf_rejects_empty():
    with pytest.raises(ValueError):
        packets_per_train_cdf(TrainStats(threshold=1))


def test_precision_constant_offset_is_zero():
    times = [1_000_000 * i for i in range(1, 6)]
    intended = [t - 100_000 for t in times]  # constant 0.1 ms offset
    assert precision(entries(times, intended)) == pytest.approx(0.0)


def test_precision_example_values():
    # diffs of 0 / 0.2 / 0.4 ms -> population std ~0.1633 ms
    intended = [0, 1_000_000, 2_000_000]
    times = [0, 1_200_000, 2_400_000]
    got = precision(entries(times, intended))
    assert got == pytest.approx(math.sqrt(((0.2e6) ** 2 * 2) / 3), rel=1e-9)
    assert got == pytest.approx(163_299.3, abs=0.5)


def test_precision_requires_two_samples():
    assert precision(entries([1], [0])) is None
    assert precision(entries([1, 2])) is None


@given(st.integers(min_value=-10**9, max_value=10**9))
@settings(max_examples=50, deadline=None)
def test_precision_offset_invariance(offset):
    rng = np.random.default_rng(3)
    intended = np.cumsum(rng.integers(100_000, 500_000, size=50))
    jitter = rng.integers(-50_000, 50_000, size=50)
    base = entries((intended + jitter).tolist(), intended.tolist())
    shifted = entries((intended + jitter + offset).tolist(), intended.tolist())
    assert precision(base) == pytest.approx(precision(shifted), rel=1e-12)


def test_ipg_sample_count():
    log = entries([0, 10, 20, 35])
    log.append(PacketLogEntry(99, 1500, None, 40, dropped=True))
    gaps = inter_packet_gaps(log)
    assert len(gaps) == 3
    assert gaps == [10, 10, 15]


def test_summarize_repetitions():
    mean, std = summarize_repetitions([10, 20, 30])
    assert (mean, std) == (20.0, 10.0)
    assert summarize_repetitions([42.0]) == (42.0, 0.0)
    mean, std = summarize_repetitions([7.0] * 20)
    assert (mean, std) == (7.0, 0.0)
