"""Kernel-side packet schedulers and the emulated network path.

Host egress is a queueing discipline feeding a line-rate NIC:

* FIFO / none - departs in arrival order as fast as the line allows;
  per-packet timestamps are ignored (a timestamp pacer degrades to
  unpaced transmission here).
* FQ - honors `intended_tx_time`: a stamped packet is held until its
  timestamp, a past or missing timestamp makes it eligible immediately,
  and nothing is ever dropped for being late.
* ETF - also timestamp-driven, becomes active `delta` ahead of each
  timestamp, but drops any packet whose timestamp already passed when it
  is handed in.  With launch-time offload the final hold happens in the
  NIC (software dequeue jitter is replaced by the NIC's launch-time
  jitter).

The bottleneck is a token-bucket shaper with a one-MTU burst: each packet
occupies the queue until its serialization at `rate` finishes, and a
packet that would push the queue past `buffer` bytes is tail-dropped.
Dequeue-time jitter is folded-normal (late-only) so a timestamp-honoring
qdisc never transmits before the requested time.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .engine import MS, US, SimTime, Simulator

DEFAULT_BOTTLENECK_RATE_BPS = 40e6  # bits per second
DEFAULT_BOTTLENECK_BUFFER = 400_000  # bytes: two BDPs at 40 Mbit/s x 40 ms
DEFAULT_ONE_WAY_DELAY_NS = 20 * MS
DEFAULT_LINE_RATE_BPS = 1e9
DEFAULT_ETF_DELTA_NS = 200 * US
DEFAULT_SW_DEQUEUE_JITTER_NS = 80 * US


class QdiscConfigError(ValueError):
    """A packet or configuration violates a scheduler requirement."""


class FoldedNormalJitter:
    """Late-only jitter: |N(0, scale)|, so held packets never leave early."""

    def __init__(self, scale_ns: int, rng: Optional[np.random.Generator]):
        self.scale_ns = int(scale_ns)
        self._rng = rng

    def draw(self) -> int:
        if self.scale_ns <= 0 or self._rng is None:
            return 0
        return abs(int(round(self._rng.normal(0.0, self.scale_ns))))


class NicModel:
    """Line-rate serialization: consecutive departures at least one
    transmission time apart (12 us for 1500 B at 1 Gbit/s)."""

    def __init__(self, line_rate_bps: float = DEFAULT_LINE_RATE_BPS):
        self.line_rate_bps = line_rate_bps
        self._free_at: SimTime = 0

    def reserve(self, candidate: SimTime, size: int) -> SimTime:
        departure = max(candidate, self._free_at)
        self._free_at = departure + max(1, round(size * 8e9 / self.line_rate_bps))
        return departure


class HostEgress:
    """Base scheduler: hand packets in with `submit`, get wire departures out."""

    kind = "none"

    def __init__(self, sim: Simulator, nic: NicModel, on_departure: Callable):
        self.sim = sim
        self.nic = nic
        self.on_departure = on_departure
        self.drop_count = 0
        self.in_queue = 0

    def submit(self, pkt) -> None:
        raise NotImplementedError

    def _emit(self, pkt, departure: SimTime) -> None:
        self.sim.schedule(departure, self._departure_event, pkt, target=f"{self.kind}-tx")

    def _departure_event(self, sim: Simulator, pkt) -> None:
        pkt.actual_tx_time = sim.now
        self.on_departure(pkt, sim.now)


class FifoEgress(HostEgress):
    """Arrival order, line rate, timestamps ignored."""

    kind = "fifo"

    def submit(self, pkt) -> None:
        self._emit(pkt, self.nic.reserve(self.sim.now, pkt.size))


class FqEgress(HostEgress):
    """Earliest-departure-time scheduling keyed on intended_tx_time."""

    kind = "fq"

    def __init__(self, sim, nic, on_departure, jitter: Optional[FoldedNormalJitter] = None,
                 horizon_ns: Optional[int] = None):
        super().__init__(sim, nic, on_departure)
        self.jitter = jitter or FoldedNormalJitter(0, None)
        self.horizon_ns = horizon_ns
        self._heap: list[tuple[SimTime, int, object]] = []
        self._seq = 0
        self._timer = None

    def submit(self, pkt) -> None:
        key = pkt.intended_tx_time if pkt.intended_tx_time is not None else self.sim.now
        if self.horizon_ns is not None:
            key = min(key, self.sim.now + self.horizon_ns)
        heapq.heappush(self._heap, (key, self._seq, pkt))
        self._seq += 1
        self.in_queue += 1
        self._service()

    def _service(self) -> None:
        now = self.sim.now
        while self._heap and self._heap[0][0] <= now:
            key, _, pkt = heapq.heappop(self._heap)
            self.in_queue -= 1
            self._emit(pkt, self.nic.reserve(max(key, now) + self.jitter.draw(), pkt.size))
        if self._heap:
            head = self._heap[0][0]
            if self._timer is None or self._timer.cancelled or self._timer.fire_time > head:
                self.sim.cancel(self._timer)
                self._timer = self.sim.schedule(head, self._timer_fired, target="fq-timer")

    def _timer_fired(self, sim: Simulator, payload) -> None:
        self._timer = None
        self._service()


class EtfEgress(HostEgress):
    """Timestamp scheduling with a `delta` activation offset and drop-if-late."""

    kind = "etf"

    def __init__(self, sim, nic, on_departure, delta_ns: int = DEFAULT_ETF_DELTA_NS,
                 offload: bool = False, sw_jitter: Optional[FoldedNormalJitter] = None,
                 launch_time_jitter: Optional[FoldedNormalJitter] = None,
                 on_drop: Optional[Callable] = None):
        super().__init__(sim, nic, on_departure)
        self.delta_ns = delta_ns
        self.offload = offload
        self.sw_jitter = sw_jitter or FoldedNormalJitter(0, None)
        self.launch_time_jitter = launch_time_jitter or FoldedNormalJitter(0, None)
        self.on_drop = on_drop
        self._heap: list[tuple[SimTime, int, object]] = []
        self._seq = 0
        self._timer = None

    def submit(self, pkt) -> None:
        if pkt.intended_tx_time is None:
            raise QdiscConfigError("ETF requires an intended transmit timestamp on every packet")
        if pkt.intended_tx_time < self.sim.now:
            self.drop_count += 1
            if self.on_drop is not None:
                self.on_drop(pkt, self.sim.now)
            return
        heapq.heappush(self._heap, (pkt.intended_tx_time, self._seq, pkt))
        self._seq += 1
        self.in_queue += 1
        self._schedule_wake()

    def _schedule_wake(self) -> None:
        if not self._heap:
            return
        wake = max(self.sim.now, self._heap[0][0] - self.delta_ns)
        if self._timer is None or self._timer.cancelled or self._timer.fire_time > wake:
            self.sim.cancel(self._timer)
            self._timer = self.sim.schedule(wake, self._timer_fired, target="etf-timer")

    def _timer_fired(self, sim: Simulator, payload) -> None:
        self._timer = None
        self._activate()

    def _activate(self) -> None:
        # Schedulable window reached for the head packet(s): commit their
        # transmissions at the intended timestamps.
        now = self.sim.now
        while self._heap and self._heap[0][0] - self.delta_ns <= now:
            txtime, _, pkt = heapq.heappop(self._heap)
            self.in_queue -= 1
            jitter = self.launch_time_jitter.draw() if self.offload else self.sw_jitter.draw()
            self._emit(pkt, self.nic.reserve(txtime + jitter, pkt.size))
        self._schedule_wake()


@dataclass
class BottleneckConfig:
    rate_bps: float = DEFAULT_BOTTLENECK_RATE_BPS
    buffer_bytes: int = DEFAULT_BOTTLENECK_BUFFER
    one_way_delay_forward_ns: SimTime = DEFAULT_ONE_WAY_DELAY_NS
    one_way_delay_reverse_ns: SimTime = DEFAULT_ONE_WAY_DELAY_NS

    @property
    def bdp_bytes(self) -> float:
        min_rtt_s = (self.one_way_delay_forward_ns + self.one_way_delay_reverse_ns) / 1e9
        return self.rate_bps / 8 * min_rtt_s


class TbfBottleneck:
    """Rate shaper with a finite tail-drop queue and a one-MTU burst.

    Forwarded packets depart `size * 8 / rate` after the previous departure
    (or their own arrival) and then traverse the configured one-way delay.
    """

    def __init__(self, sim: Simulator, config: BottleneckConfig, deliver: Callable,
                 on_drop: Optional[Callable] = None):
        self.sim = sim
        self.config = config
        self.deliver = deliver
        self.on_drop = on_drop
        self.drop_count = 0
        self.queued_bytes = 0
        self.max_queued_bytes = 0
        self._busy_until: SimTime = 0

    def submit(self, pkt) -> None:
        now = self.sim.now
        if self.queued_bytes + pkt.size > self.config.buffer_bytes:
            self.drop_count += 1
            if self.on_drop is not None:
                self.on_drop(pkt, now)
            return
        self.queued_bytes += pkt.size
        self.max_queued_bytes = max(self.max_queued_bytes, self.queued_bytes)
        serialization = max(1, round(pkt.size * 8e9 / self.config.rate_bps))
        departure = max(now, self._busy_until) + serialization
        self._busy_until = departure
        self.sim.schedule(departure, self._forward, pkt, target="tbf-tx")

    def _forward(self, sim: Simulator, pkt) -> None:
        self.queued_bytes -= pkt.size
        arrival = sim.now + self.config.one_way_delay_forward_ns
        sim.schedule(arrival, lambda s, p: self.deliver(p, s.now), pkt, target="link-fwd")


def queue_equation_drop_estimate(
    offered_bytes: float,
    duration_s: float,
    rate_bps: float,
    buffer_bytes: int,
    size: int,
) -> float:
    """Closed-form overload drop estimate from cold start.

    Everything offered beyond what the shaper can drain plus what the
    buffer absorbs must be dropped: (offered - rate*t - buffer) / size.
    """
    drained = rate_bps / 8 * duration_s
    return max(0.0, (offered_bytes - drained - buffer_bytes) / size)


def brute_force_tbf_drops(
    arrival_times_ns: list[int],
    size: int,
    rate_bps: float,
    buffer_bytes: int,
) -> int:
    """Independent queue-equation oracle for the shaper's drop count.

    Replays the arrival schedule against a scalar (departure clock,
    occupancy) state machine with the same store-and-forward semantics.
    """
    serialization = size * 8e9 / rate_bps
    departures: list[float] = []
    busy_until = 0.0
    occupancy = 0
    drops = 0
    idx = 0
    for arrival in arrival_times_ns:
        while idx < len(departures) and departures[idx] <= arrival:
            occupancy -= size
            idx += 1
        if occupancy + size > buffer_bytes:
            drops += 1
            continue
        occupancy += size
        departure = max(arrival, busy_until) + serialization
        busy_until = departure
        departures.append(departure)
    return drops
