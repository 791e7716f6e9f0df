from dataclasses import dataclass
from typing import Optional

import pytest

from pacersim.engine import MS, US, SimTime, Simulator
from pacersim.qdisc import (
    BottleneckConfig,
    EtfEgress,
    FifoEgress,
    FoldedNormalJitter,
    FqEgress,
    NicModel,
    QdiscConfigError,
    TbfBottleneck,
    brute_force_tbf_drops,
    queue_equation_drop_estimate,
)


@dataclass
class StubPacket:
    packet_number: int
    size: int = 1500
    intended_tx_time: Optional[SimTime] = None
    actual_tx_time: Optional[SimTime] = None


class Collector:
    def __init__(self):
        self.departed = []
        self.dropped = []

    def on_departure(self, pkt, now):
        self.departed.append((pkt.packet_number, now))

    def on_drop(self, pkt, now):
        self.dropped.append((pkt.packet_number, now))


def make_fq(sim, jitter_ns=0):
    col = Collector()
    fq = FqEgress(sim, NicModel(), col.on_departure,
                  jitter=FoldedNormalJitter(jitter_ns, sim.rng.stream("fq") if jitter_ns else None))
    return fq, col


# --- FQ -------------------------------------------------------------------


def test_fq_past_timestamp_departs_immediately_not_dropped():
    sim = Simulator()
    fq, col = make_fq(sim)
    sim.run_until(2 * MS)
    fq.submit(StubPacket(1, intended_tx_time=0))  # 2 ms in the past
    sim.run_until(3 * MS)
    assert col.departed == [(1, 2 * MS)]
    assert fq.drop_count == 0


def test_fq_departs_in_timestamp_order():
    sim = Simulator()
    fq, col = make_fq(sim)
    fq.submit(StubPacket(2, intended_tx_time=10_100_000))  # 10.1 ms
    fq.submit(StubPacket(1, intended_tx_time=10_000_000))  # 10 ms
    sim.run_until(20 * MS)
    assert [n for n, _ in col.departed] == [1, 2]
    assert [t for _, t in col.departed] == [10_000_000, 10_100_000]


def test_fq_timestampless_packet_departs_before_future_stamped():
    sim = Simulator()
    fq, col = make_fq(sim)
    fq.submit(StubPacket(1, intended_tx_time=5 * MS))
    fq.submit(StubPacket(2, intended_tx_time=None))
    sim.run_until(10 * MS)
    assert [n for n, _ in col.departed] == [2, 1]


def test_fq_zero_jitter_precision_is_exact():
    sim = Simulator()
    fq, col = make_fq(sim)
    for i in range(50):
        fq.submit(StubPacket(i, intended_tx_time=(i + 1) * MS))
    sim.run_until(60 * MS)
    assert all(t == (i + 1) * MS for i, (_, t) in enumerate(col.departed))


# --- ETF ---------------------------------------------------------------------


def test_etf_holds_until_timestamp():
    sim = Simulator()
    col = Collector()
    etf = EtfEgress(sim, NicModel(), col.on_departure, delta_ns=200 * US)
    sim.run_until(10 * MS)
    etf.submit(StubPacket(1, intended_tx_time=10_100_000))  # schedulable at 9.9 ms
    sim.run_until(11 * MS)
    assert col.departed == [(1, 10_100_000)]


def test_etf_drops_late_timestamp():
    sim = Simulator()
    col = Collector()
    etf = EtfEgress(sim, NicModel(), col.on_departure, on_drop=col.on_drop)
    sim.run_until(10 * MS)
    etf.submit(StubPacket(1, intended_tx_time=9 * MS))
    sim.run_until(11 * MS)
    assert col.departed == []
    assert etf.drop_count == 1
    assert col.dropped == [(1, 10 * MS)]


def test_etf_requires_timestamps():
    sim = Simulator()
    etf = EtfEgress(sim, NicModel(), lambda p, t: None)
    with pytest.raises(QdiscConfigError):
        etf.submit(StubPacket(1, intended_tx_time=None))


def test_etf_offload_equals_software_with_zero_jitter():
    outcomes = []
    for offload in (False, True):
        sim = Simulator()
        col = Collector()
        etf = EtfEgress(sim, NicModel(), col.on_departure, offload=offload)
        for i in range(20):
            etf.submit(StubPacket(i, intended_tx_time=(i + 1) * MS))
        sim.run_until(30 * MS)
        outcomes.append(col.departed)
    assert outcomes[0] == outcomes[1]


def test_fq_vs_etf_on_identical_late_trace():
    """Scripted late-timestamp injection: ETF drops, FQ keeps everything."""
    trace = [(i, (i + 1) * MS) for i in range(10)]  # submit at 2 ms with stamps 1..10 ms

    def run(kind):
        sim = Simulator()
        col = Collector()
        if kind == "fq":
            eg = FqEgress(sim, NicModel(), col.on_departure)
        else:
            eg = EtfEgress(sim, NicModel(), col.on_departure, on_drop=col.on_drop)
        sim.run_until(2 * MS)
        for num, stamp in trace:
            eg.submit(StubPacket(num, intended_tx_time=stamp))
        sim.run_until(20 * MS)
        return eg, col

    fq, fq_col = run("fq")
    etf, etf_col = run("etf")
    assert fq.drop_count == 0
    assert len(fq_col.departed) == 10
    assert etf.drop_count == 1  # the 1 ms stamp was already in the past
    assert len(etf_col.departed) == 9


# --- FIFO / NIC -----------------------------------------------------------------


def test_fifo_preserves_arrival_order_and_serialization():
    sim = Simulator()
    col = Collector()
    fifo = FifoEgress(sim, NicModel(line_rate_bps=1e9), col.on_departure)
    for i in range(5):
        fifo.submit(StubPacket(i, intended_tx_time=5 * MS))  # stamps ignored
    sim.run_until(1 * MS)
    nums = [n for n, _ in col.departed]
    times = [t for _, t in col.departed]
    assert nums == [0, 1, 2, 3, 4]
    assert [b - a for a, b in zip(times, times[1:])] == [12 * US] * 4


# --- TBF bottleneck -----------------------------------------------------------


def test_tbf_serializes_at_configured_rate():
    sim = Simulator()
    delivered = []
    tbf = TbfBottleneck(sim, BottleneckConfig(), lambda p, t: delivered.append((p.packet_number, t)))
    tbf.submit(StubPacket(1))
    sim.run_until(100 * MS)
    # 0.3 ms serialization at 40 Mbit/s plus 20 ms one-way delay
    assert delivered == [(1, 300_000 + 20 * MS)]


def test_tbf_tail_drop_at_buffer_cap():
    sim = Simulator()
    col = Collector()
    tbf = TbfBottleneck(sim, BottleneckConfig(), lambda p, t: None, on_drop=col.on_drop)
    # 266 x 1500 B = 399000 B occupies the queue; the 267th would exceed 400000.
    for i in range(266):
        tbf.submit(StubPacket(i))
    assert tbf.drop_count == 0
    assert tbf.queued_bytes == 399_000
    tbf.submit(StubPacket(999))
    assert tbf.drop_count == 1
    assert col.dropped[0][0] == 999


def test_tbf_queue_occupancy_never_exceeds_buffer():
    sim = Simulator()
    cfg = BottleneckConfig()
    tbf = TbfBottleneck(sim, cfg, lambda p, t: None)
    interval = 240_000  # 50 Mbit/s of 1500 B packets

    def arrive(s, i):
        tbf.submit(StubPacket(i))
        if i < 2000:
            s.schedule_in(interval, arrive, i + 1)

    sim.schedule(0, arrive, 0)
    sim.run_until(600 * MS)
    assert tbf.max_queued_bytes <= cfg.buffer_bytes


def test_tbf_50mbit_overload_matches_queue_equation_and_replay():
    sim = Simulator()
    cfg = BottleneckConfig()
    tbf = TbfBottleneck(sim, cfg, lambda p, t: None)
    interval = 240_000  # 1500 B at 50 Mbit/s
    arrivals = list(range(0, 1_000_000_000, interval))
    for t in arrivals:
        sim.schedule(t, lambda s, p: tbf.submit(StubPacket(p)), len(arrivals))
    sim.run_until(1_000_000_000)
    estimate = queue_equation_drop_estimate(
        offered_bytes=len(arrivals) * 1500,
        duration_s=1.0,
        rate_bps=cfg.rate_bps,
        buffer_bytes=cfg.buffer_bytes,
        size=1500,
    )
    replay = brute_force_tbf_drops(arrivals, 1500, cfg.rate_bps, cfg.buffer_bytes)
    assert abs(tbf.drop_count - estimate) <= 2
    assert tbf.drop_count == replay
    assert 560 <= tbf.drop_count <= 575


def test_tbf_long_run_rate_never_exceeds_configured():
    sim = Simulator()
    cfg = BottleneckConfig()
    forwarded = []
    tbf = TbfBottleneck(sim, cfg, lambda p, t: forwarded.append(t))
    for t in range(0, 1_000_000_000, 100_000):  # heavy overload
        sim.schedule(t, lambda s, p: tbf.submit(StubPacket(0)))
    sim.run_until(1_200_000_000)
    window = [t for t in forwarded if t <= 1_000_000_000 + 20 * MS]
    assert len(window) * 1500 * 8 <= cfg.rate_bps * 1.0 + 1500 * 8  # one MTU of slack


def test_bdp_default_buffer_is_two_bdp():
    cfg = BottleneckConfig()
    assert cfg.bdp_bytes == pytest.approx(200_000)
    assert cfg.buffer_bytes == 2 * cfg.bdp_bytes
