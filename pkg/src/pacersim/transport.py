"""Simplified reliable bulk-transfer transport with QUIC-like semantics.

One object of `object_size` bytes flows from a sender to a receiver as
DATA packets with monotonically increasing packet numbers.  Retransmitted
payload always travels under a fresh packet number.  The receiver ACKs
every `ack_every_n` data packets (or after `max_ack_delay`), reporting all
received packet-number ranges; the sender runs packet-threshold and
time-threshold loss detection plus a probe timeout for tail losses.

The sender side also owns the pacing decision: packets (or GSO buffers)
are handed to the host egress either immediately with an intended
transmit timestamp attached (TIMESTAMP), at self-timed release points
(INTERVAL), on leaky-bucket credit (LEAKY_BUCKET), or as fast as the
window allows (NONE).

With GSO enabled, sendable segments are batched into buffers of up to
`max_segments`.  A buffer closes when it is full or when one full-buffer
serialization interval has passed since it opened, which models the
syscall-amortizing write batching GSO exists for.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .cca import AckSample, CongestionController
from .engine import MS, SimTime, Simulator, interval_ns
from .pacing import (
    ChainPacer,
    GsoConfig,
    GsoMode,
    LeakyBucket,
    PacerConfig,
    PacerStrategy,
    ReleaseJitter,
    gso_emit,
)

DEFAULT_OBJECT_SIZE = 100 * 1024 * 1024  # 100 MiB
DEFAULT_MSS = 1460
DEFAULT_HEADER_BYTES = 40
ACK_WIRE_SIZE = 40
MAX_ACK_RANGES = 32
MIN_RTT_FLOOR_NS = 1_000


class ProtocolViolationError(RuntimeError):
    """The peer acknowledged a packet number that was never sent."""


class PacketKind(str, Enum):
    DATA = "DATA"
    ACK = "ACK"


@dataclass(slots=True)
class AckInfo:
    largest_acked: int
    acked_ranges: list[tuple[int, int]]  # inclusive, sorted descending
    ack_delay: SimTime = 0


@dataclass(slots=True)
class Packet:
    packet_number: int
    size: int
    kind: PacketKind = PacketKind.DATA
    payload_bytes: int = 0
    offset: int = 0
    intended_tx_time: Optional[SimTime] = None
    actual_tx_time: Optional[SimTime] = None
    send_time: Optional[SimTime] = None
    is_retransmission: bool = False
    carried_ack: Optional[AckInfo] = None


@dataclass
class TransferConfig:
    object_size: int = DEFAULT_OBJECT_SIZE
    mss: int = DEFAULT_MSS
    header_bytes: int = DEFAULT_HEADER_BYTES
    ack_every_n: int = 2
    max_ack_delay_ns: SimTime = 25 * MS
    loss_packet_threshold: int = 3
    loss_time_factor: float = 9 / 8

    def __post_init__(self):
        if self.object_size <= 0:
            raise ValueError("object_size must be positive")
        if self.ack_every_n < 1:
            raise ValueError("ack_every_n must be at least 1")

    @property
    def full_packet_size(self) -> int:
        return self.mss + self.header_bytes


@dataclass
class AppPattern:
    """CONTINUOUS or on/off duty cycling of application data availability."""

    on_ns: SimTime = 0  # zero means continuous
    off_ns: SimTime = 0

    @property
    def continuous(self) -> bool:
        return self.off_ns == 0

    def active(self, now: SimTime) -> bool:
        if self.continuous:
            return True
        return now % (self.on_ns + self.off_ns) < self.on_ns

    def next_active_edge(self, now: SimTime) -> SimTime:
        cycle = self.on_ns + self.off_ns
        return (now // cycle + 1) * cycle


class RangeSet:
    """Sorted disjoint inclusive integer ranges (packet numbers or bytes)."""

    def __init__(self):
        self._ranges: list[list[int]] = []

    def add(self, value: int) -> int:
        return self.add_range(value, value)

    def add_range(self, start: int, end: int) -> int:
        """Insert [start, end]; returns how many values are newly covered."""
        ranges = self._ranges
        lo, hi = 0, len(ranges)
        while lo < hi:
            mid = (lo + hi) // 2
            if ranges[mid][0] < start:
                lo = mid + 1
            else:
                hi = mid
        gained = end - start + 1
        j = max(0, lo - 1)
        while j < len(ranges) and ranges[j][0] <= end:
            overlap = min(end, ranges[j][1]) - max(start, ranges[j][0]) + 1
            if overlap > 0:
                gained -= overlap
            j += 1
        ranges.insert(lo, [start, end])
        # Merge neighbours that touch or overlap.
        i = max(0, lo - 1)
        while i + 1 < len(ranges):
            if ranges[i + 1][0] <= ranges[i][1] + 1:
                ranges[i][1] = max(ranges[i][1], ranges[i + 1][1])
                del ranges[i + 1]
            elif i + 1 > lo:
                break
            else:
                i += 1
        return gained

    def contains(self, value: int) -> bool:
        for start, end in self._ranges:
            if start <= value <= end:
                return True
            if start > value:
                return False
        return False

    def descending(self, limit: Optional[int] = None) -> list[tuple[int, int]]:
        out = [(s, e) for s, e in reversed(self._ranges)]
        return out if limit is None else out[:limit]

    def covered_until(self, origin: int = 0) -> int:
        """First value >= origin not in the set (in-order frontier)."""
        for start, end in self._ranges:
            if start > origin:
                return origin
            if start <= origin <= end:
                return end + 1
        return origin

    def __len__(self) -> int:
        return len(self._ranges)


class Receiver:
    """Counts arriving DATA, reconstructs the byte stream, and emits ACKs."""

    def __init__(self, sim: Simulator, config: TransferConfig, send_ack: Callable[[AckInfo, SimTime], None],
                 on_complete: Optional[Callable[[SimTime], None]] = None):
        self.sim = sim
        self.config = config
        self.send_ack = send_ack
        self.on_complete = on_complete
        self.received_pns = RangeSet()
        self.received_bytes = RangeSet()
        self.delivered_pn_list: list[int] = []
        self.unique_payload = 0
        self.in_order_bytes = 0
        self.last_in_order_time: Optional[SimTime] = None
        self.completion_time: Optional[SimTime] = None
        self.data_since_ack = 0
        self.largest_arrival: SimTime = 0
        self._ack_timer = None

    def on_data(self, pkt: Packet, now: SimTime) -> None:
        self.delivered_pn_list.append(pkt.packet_number)
        self.received_pns.add(pkt.packet_number)
        self.largest_arrival = now
        if pkt.payload_bytes > 0:
            before = self.received_bytes.covered_until(0)
            gained = self.received_bytes.add_range(pkt.offset, pkt.offset + pkt.payload_bytes - 1)
            self.unique_payload += gained
            after = self.received_bytes.covered_until(0)
            if after > before:
                self.in_order_bytes = after
                self.last_in_order_time = now
                if after >= self.config.object_size and self.completion_time is None:
                    self.completion_time = now
                    if self.on_complete is not None:
                        self.on_complete(now)
        self.data_since_ack += 1
        if self.data_since_ack >= self.config.ack_every_n:
            self._emit_ack(now)
        elif self._ack_timer is None or self._ack_timer.cancelled:
            self._ack_timer = self.sim.schedule(
                now + self.config.max_ack_delay_ns, self._delayed_ack, target="rx-ack-timer"
            )

    def _delayed_ack(self, sim: Simulator, payload) -> None:
        self._ack_timer = None
        if self.data_since_ack > 0:
            self._emit_ack(sim.now)

    def _emit_ack(self, now: SimTime) -> None:
        self.sim.cancel(self._ack_timer)
        self._ack_timer = None
        self.data_since_ack = 0
        ranges = self.received_pns.descending(MAX_ACK_RANGES)
        ack = AckInfo(
            largest_acked=ranges[0][1],
            acked_ranges=ranges,
            ack_delay=max(0, now - self.largest_arrival),
        )
        self.send_ack(ack, now)


@dataclass(slots=True)
class SentPacket:
    packet_number: int
    offset: int
    payload_bytes: int
    size: int
    send_time: Optional[SimTime] = None
    delivered_at_send: int = 0
    acked: bool = False
    lost: bool = False
    is_retransmission: bool = False


@dataclass
class RttEstimator:
    """RFC 6298-style smoothing: 7/8 old + 1/8 new, rttvar weight 3/4."""

    smoothed_ns: Optional[int] = None
    rttvar_ns: int = 0
    latest_ns: int = 0
    min_ns: Optional[int] = None

    def update(self, sample_ns: int) -> None:
        sample_ns = max(MIN_RTT_FLOOR_NS, sample_ns)
        self.latest_ns = sample_ns
        self.min_ns = sample_ns if self.min_ns is None else min(self.min_ns, sample_ns)
        if self.smoothed_ns is None:
            self.smoothed_ns = sample_ns
            self.rttvar_ns = sample_ns // 2
        else:
            self.rttvar_ns = (3 * self.rttvar_ns + abs(self.smoothed_ns - sample_ns)) // 4
            self.smoothed_ns = (7 * self.smoothed_ns + sample_ns) // 8


class Sender:
    """Window- and pacing-gated DATA source with loss recovery."""

    def __init__(
        self,
        sim: Simulator,
        config: TransferConfig,
        cca: CongestionController,
        pacer_config: PacerConfig,
        gso_config: GsoConfig,
        submit: Callable[[Packet], None],
        app_pattern: Optional[AppPattern] = None,
    ):
        self.sim = sim
        self.config = config
        self.cca = cca
        self.pacer_config = pacer_config
        self.gso = gso_config
        self.gso.segment_size = config.full_packet_size
        self.submit = submit
        self.app = app_pattern or AppPattern()

        self.chain = ChainPacer()
        self.jitter = ReleaseJitter(
            pacer_config.release_jitter_stddev_ns, sim.rng.stream("pacer-jitter")
        )
        self.bucket: Optional[LeakyBucket] = None
        if pacer_config.strategy is PacerStrategy.LEAKY_BUCKET:
            self.bucket = LeakyBucket(
                capacity=pacer_config.bucket_capacity_bytes, leak_rate=self.cca.pacing_rate()
            )

        self.next_pn = 0
        self.next_offset = 0
        self.sent: dict[int, SentPacket] = {}
        self.unacked: dict[int, SentPacket] = {}
        self.bytes_in_flight = 0
        self.largest_acked = -1
        self.retransmit_queue: list[tuple[int, int]] = []
        self.rtt = RttEstimator()
        self.delivered_bytes = 0
        self.total_lost_packets = 0
        self.first_send_time: Optional[SimTime] = None

        self._pacer_wake = None
        self._app_wake = None
        self._blocked_by_cwnd = False
        self._gso_open_time: Optional[SimTime] = None
        self._gso_flush_timer = None
        self._gso_release_pending = False

        self.pto_count = 0
        self.last_eliciting_send: Optional[SimTime] = None
        self._pto_timer = None

        self.on_ack_processed: Optional[Callable[[SimTime], None]] = None
        self.on_congestion_event: Optional[Callable[[SimTime, float, float], None]] = None

    # -- data availability --------------------------------------------------

    def _has_data(self) -> bool:
        return bool(self.retransmit_queue) or self.next_offset < self.config.object_size

    def _next_payload_size(self) -> int:
        if self.retransmit_queue:
            _, length = self.retransmit_queue[0]
            return min(length, self.config.mss)
        return min(self.config.mss, self.config.object_size - self.next_offset)

    def _window_room(self, size: int) -> bool:
        return self.bytes_in_flight + size <= self.cca.congestion_window()

    def transfer_complete_at_sender(self) -> bool:
        return self.next_offset >= self.config.object_size and not self.retransmit_queue

    # -- packet construction -----------------------------------------------

    def _build_packet(self, now: SimTime) -> Packet:
        payload = self._next_payload_size()
        retransmission = False
        if self.retransmit_queue:
            offset, length = self.retransmit_queue.pop(0)
            payload = min(length, self.config.mss)
            if length > payload:
                self.retransmit_queue.insert(0, (offset + payload, length - payload))
            retransmission = True
        else:
            offset = self.next_offset
            self.next_offset += payload
        pkt = Packet(
            packet_number=self.next_pn,
            size=payload + self.config.header_bytes,
            payload_bytes=payload,
            offset=offset,
            is_retransmission=retransmission,
        )
        self.next_pn += 1
        record = SentPacket(
            packet_number=pkt.packet_number,
            offset=offset,
            payload_bytes=payload,
            size=pkt.size,
            delivered_at_send=self.delivered_bytes,
            is_retransmission=retransmission,
        )
        self.sent[pkt.packet_number] = record
        self.unacked[pkt.packet_number] = record
        self.bytes_in_flight += pkt.size
        self.cca.on_packet_sent(pkt.packet_number, pkt.size, now)
        return pkt

    def _release(self, pkt: Packet, now: SimTime, intended: Optional[SimTime],
                 sent_at: Optional[SimTime] = None) -> None:
        record = self.sent[pkt.packet_number]
        record.send_time = now if sent_at is None else sent_at
        record.delivered_at_send = self.delivered_bytes
        pkt.send_time = record.send_time
        pkt.intended_tx_time = intended
        if self.first_send_time is None:
            self.first_send_time = now
        self.last_eliciting_send = now
        self._arm_pto()
        self.submit(pkt)

    # -- pacing & send pump ---------------------------------------------------

    def start(self) -> None:
        self.pump(self.sim.now)

    def pump(self, now: SimTime) -> None:
        if self.gso.enabled:
            self._pump_gso(now)
        else:
            self._pump_packets(now)

    def _check_app(self, now: SimTime) -> bool:
        if self.app.active(now):
            return True
        if self._has_data() and (self._app_wake is None or self._app_wake.cancelled):
            self._app_wake = self.sim.schedule(
                self.app.next_active_edge(now), self._app_edge, target="app-wake"
            )
        return False

    def _app_edge(self, sim: Simulator, payload) -> None:
        self._app_wake = None
        self.pump(sim.now)

    def _pump_packets(self, now: SimTime) -> None:
        if self._pacer_wake is not None and not self._pacer_wake.cancelled:
            return
        strategy = self.pacer_config.strategy
        while self._has_data() and self._check_app(now):
            size = self._next_payload_size() + self.config.header_bytes
            if not self._window_room(size):
                self._blocked_by_cwnd = True
                return
            rate = self.cca.pacing_rate()
            if strategy is PacerStrategy.INTERVAL:
                release = self.chain.peek_next(now)
                self.chain.advance_from(release, size, rate)
                if release > now:
                    # Commit now so the (possibly early) jittered wake can
                    # release without re-deciding; the chain stays anchored
                    # at the intended time.
                    pkt = self._build_packet(now)
                    wake_at = self.jitter.apply(release, now)
                    self._pacer_wake = self.sim.schedule(
                        wake_at, self._interval_release, payload=(pkt, release), target="pacer-wake"
                    )
                    return
                pkt = self._build_packet(now)
                self._release(pkt, now, release)
            elif strategy is PacerStrategy.LEAKY_BUCKET:
                self.bucket.set_rate(rate, now)
                ready = self.bucket.admit(size, now)
                if ready > now:
                    self._pacer_wake = self.sim.schedule(
                        ready, self._pacer_fire, target="pacer-wake"
                    )
                    return
                pkt = self._build_packet(now)
                self._release(pkt, now, None)
            elif strategy is PacerStrategy.TIMESTAMP:
                intended = self.chain.next_send_time(size, rate, now)
                pkt = self._build_packet(now)
                self._release(pkt, now, intended)
            else:  # NONE
                pkt = self._build_packet(now)
                self._release(pkt, now, None)

    def _pacer_fire(self, sim: Simulator, payload) -> None:
        self._pacer_wake = None
        self.pump(sim.now)

    def _interval_release(self, sim: Simulator, payload) -> None:
        pkt, anchor = payload
        self._pacer_wake = None
        self._release(pkt, sim.now, anchor)
        self.pump(sim.now)

    # -- GSO batching -------------------------------------------------------

    def _available_segments(self, now: SimTime) -> int:
        if not self._has_data() or not self.app.active(now):
            return 0
        room = self.cca.congestion_window() - self.bytes_in_flight
        segments = 0
        offset_probe = self.next_offset
        # Retransmit ranges count as whole segments here; sizing them exactly
        # is not worth the bookkeeping.
        segments += len(self.retransmit_queue)
        room -= segments * self.gso.segment_size
        while segments < self.gso.max_segments and offset_probe < self.config.object_size:
            payload = min(self.config.mss, self.config.object_size - offset_probe)
            size = payload + self.config.header_bytes
            if room < size:
                break
            room -= size
            offset_probe += payload
            segments += 1
        return min(segments, self.gso.max_segments)

    def _pump_gso(self, now: SimTime) -> None:
        if self._gso_release_pending:
            return
        avail = self._available_segments(now)
        if avail == 0:
            if not self._has_data():
                return
            if not self.app.active(now):
                self._check_app(now)
            else:
                self._blocked_by_cwnd = True
            return
        if avail >= self.gso.max_segments:
            self._cancel_gso_timer()
            self._flush_gso(now)
            return
        if self._gso_open_time is None:
            # Buffer opens; it closes when full or after the time a full
            # buffer would take on the wire at the current pacing rate.
            self._gso_open_time = now
            deadline = now + interval_ns(
                self.gso.max_segments * self.gso.segment_size, self.cca.pacing_rate()
            )
            self._gso_flush_timer = self.sim.schedule(
                deadline, self._gso_deadline, target="gso-flush"
            )

    def _cancel_gso_timer(self) -> None:
        self.sim.cancel(self._gso_flush_timer)
        self._gso_flush_timer = None
        self._gso_open_time = None

    def _gso_deadline(self, sim: Simulator, payload) -> None:
        self._gso_flush_timer = None
        self._gso_open_time = None
        if self._gso_release_pending:
            return
        if self._available_segments(sim.now) > 0:
            self._flush_gso(sim.now)
        else:
            self.pump(sim.now)

    def _flush_gso(self, now: SimTime) -> None:
        n = self._available_segments(now)
        if n == 0:
            return
        self._gso_open_time = None
        strategy = self.pacer_config.strategy
        rate = self.cca.pacing_rate()
        buffer_bytes = n * self.gso.segment_size
        if strategy is PacerStrategy.INTERVAL:
            release = self.chain.peek_next(now)
            self.chain.advance_from(release, buffer_bytes, rate)
            if release > now:
                self._gso_release_pending = True
                self.sim.schedule(
                    self.jitter.apply(release, now),
                    self._gso_release,
                    payload=(n, rate, release),
                    target="gso-release",
                )
                return
            self._emit_gso_buffer(n, rate, now, chain_anchor=release)
        elif strategy is PacerStrategy.LEAKY_BUCKET:
            self.bucket.set_rate(rate, now)
            ready = self.bucket.admit(buffer_bytes, now)
            if ready > now:
                self._gso_release_pending = True
                self.sim.schedule(
                    ready, self._gso_release, payload=(n, rate, None), target="gso-release"
                )
                return
            self._emit_gso_buffer(n, rate, now, chain_anchor=None)
        else:
            anchor = None
            if strategy is PacerStrategy.TIMESTAMP:
                anchor = self.chain.next_send_time(buffer_bytes, rate, now)
            self._emit_gso_buffer(n, rate, now, chain_anchor=anchor)
        self.pump(now)

    def _gso_release(self, sim: Simulator, payload) -> None:
        n, rate, anchor = payload
        self._gso_release_pending = False
        if self.pacer_config.strategy is PacerStrategy.LEAKY_BUCKET:
            # Credit was not consumed at scheduling time; take it now.
            self.bucket.admit(min(n, self._available_segments(sim.now)) * self.gso.segment_size, sim.now)
        n = min(n, self._available_segments(sim.now))
        if n > 0:
            self._emit_gso_buffer(n, rate, sim.now, chain_anchor=anchor)
        self.pump(sim.now)

    def _emit_gso_buffer(self, n: int, rate: float, now: SimTime, chain_anchor: Optional[SimTime]) -> None:
        packets = [self._build_packet(now) for _ in range(n)]
        releases = gso_emit([p.size for p in packets], self.gso, rate, now)
        base_intended = chain_anchor if chain_anchor is not None else now
        for (idx, release_at), pkt in zip(releases, packets):
            offset = release_at - now
            intended = None
            if self.pacer_config.attaches_txtime:
                if self.gso.mode is GsoMode.PACED:
                    intended = base_intended + offset
                else:
                    intended = base_intended
            if self.gso.mode is GsoMode.PACED and offset > 0 and not self.pacer_config.attaches_txtime:
                self.sim.schedule(
                    release_at,
                    lambda s, p: self._release(p, s.now, None),
                    payload=pkt,
                    target="gso-seg",
                )
            elif intended is not None and self.pacer_config.strategy is PacerStrategy.TIMESTAMP:
                # Timestamp pacing hands the whole buffer to the qdisc now;
                # send times reflect the socket write, like a real stack.
                self._release(pkt, now, intended)
            elif offset > 0:
                self.sim.schedule(
                    release_at,
                    lambda s, p, it=intended: self._release(p, s.now, it),
                    payload=pkt,
                    target="gso-seg",
                )
            else:
                self._release(pkt, now, intended)

    # -- ACK processing ---------------------------------------------------------

    def on_ack(self, ack: AckInfo, now: SimTime) -> None:
        if ack.largest_acked >= self.next_pn:
            raise ProtocolViolationError(
                f"ACK for packet {ack.largest_acked} but largest sent is {self.next_pn - 1}"
            )
        for start, end in ack.acked_ranges:
            if end >= self.next_pn:
                raise ProtocolViolationError(f"ACK range {start}..{end} beyond sent packets")
        # The unacked dict is insertion-ordered by packet number; scan only
        # the entries at or below largest_acked rather than the ACK ranges,
        # which cover the receiver's whole history.
        ranges_ascending = sorted(ack.acked_ranges)
        newly_acked: list[SentPacket] = []
        for record in self.unacked.values():
            pn = record.packet_number
            if pn > ack.largest_acked:
                break
            if record.send_time is None:
                continue
            for start, end in ranges_ascending:
                if start > pn:
                    break
                if pn <= end:
                    record.acked = True
                    newly_acked.append(record)
                    if not record.lost:
                        self.bytes_in_flight -= record.size
                    break
        for record in newly_acked:
            del self.unacked[record.packet_number]

        if not newly_acked:
            return

        rtt_sample = None
        largest_record = self.sent[ack.largest_acked]
        if largest_record.acked and any(r.packet_number == ack.largest_acked for r in newly_acked):
            raw = now - largest_record.send_time
            rtt_sample = max(MIN_RTT_FLOOR_NS, raw - min(ack.ack_delay, self.config.max_ack_delay_ns))
            self.rtt.update(rtt_sample)
            self.cca.smoothed_rtt_ns = self.rtt.smoothed_ns

        acked_bytes = sum(r.size for r in newly_acked if not r.lost)
        self.delivered_bytes += sum(r.size for r in newly_acked)
        self.largest_acked = max(self.largest_acked, ack.largest_acked)
        self.pto_count = 0

        newly_lost = self._detect_losses(ack, now)
        if newly_lost:
            self.total_lost_packets += len(newly_lost)
            self.cca.on_packets_lost(len(newly_lost))
            largest_lost_sent = max(r.send_time for r in newly_lost)
            cwnd_before = self.cca.cwnd
            if self.cca.on_congestion_event(now, len(newly_lost), largest_lost_sent):
                if self.on_congestion_event is not None:
                    self.on_congestion_event(now, cwnd_before, self.cca.cwnd)

        delivery_rate = None
        if largest_record.acked and largest_record.send_time is not None and now > largest_record.send_time:
            delivery_rate = (
                (self.delivered_bytes - largest_record.delivered_at_send)
                * 1e9
                / (now - largest_record.send_time)
            )

        sample = AckSample(
            now=now,
            acked_bytes=acked_bytes,
            largest_acked=ack.largest_acked,
            largest_acked_sent_time=largest_record.send_time or 0,
            rtt_sample_ns=rtt_sample,
            cwnd_limited=self._blocked_by_cwnd,
            delivery_rate=delivery_rate,
            delivered_at_send=largest_record.delivered_at_send,
            delivered_total=self.delivered_bytes,
        )
        self._blocked_by_cwnd = False
        self.cca.on_ack(sample)
        if self.bucket is not None:
            self.bucket.set_rate(self.cca.pacing_rate(), now)
        if self.on_ack_processed is not None:
            self.on_ack_processed(now)
        self._arm_pto()
        self.pump(now)

    def _detect_losses(self, ack: AckInfo, now: SimTime) -> list[SentPacket]:
        threshold_pn = ack.largest_acked - self.config.loss_packet_threshold
        largest_send_time = self.sent[ack.largest_acked].send_time or now
        loss_delay = 0
        if self.rtt.smoothed_ns is not None:
            loss_delay = int(self.config.loss_time_factor * self.rtt.smoothed_ns)
        newly_lost = []
        for record in self.unacked.values():
            pn = record.packet_number
            if pn >= ack.largest_acked:
                break
            if record.send_time is None or record.lost:
                continue
            packet_lost = pn <= threshold_pn
            time_lost = loss_delay > 0 and record.send_time <= largest_send_time - loss_delay
            if packet_lost or time_lost:
                record.lost = True
                self.bytes_in_flight -= record.size
                self.retransmit_queue.append((record.offset, record.payload_bytes))
                newly_lost.append(record)
        for record in newly_lost:
            del self.unacked[record.packet_number]
        return newly_lost

    # -- probe timeout ------------------------------------------------------------

    def _pto_interval(self) -> SimTime:
        if self.rtt.smoothed_ns is None:
            base = 2 * self.cca.smoothed_rtt_ns
        else:
            base = self.rtt.smoothed_ns + max(4 * self.rtt.rttvar_ns, MS) + self.config.max_ack_delay_ns
        return base * (2 ** min(self.pto_count, 6))

    def _arm_pto(self) -> None:
        if not self.unacked or self.last_eliciting_send is None:
            return
        deadline = self.last_eliciting_send + self._pto_interval()
        if self._pto_timer is None or self._pto_timer.cancelled:
            self._pto_timer = self.sim.schedule(
                max(deadline, self.sim.now), self._pto_fire, target="pto"
            )

    def _pto_fire(self, sim: Simulator, payload) -> None:
        self._pto_timer = None
        if not self.unacked:
            return
        deadline = (self.last_eliciting_send or 0) + self._pto_interval()
        if sim.now < deadline:
            self._pto_timer = self.sim.schedule(deadline, self._pto_fire, target="pto")
            return
        # Probe: resend the oldest unacked payload under a new packet number,
        # bypassing pacer and window gates.
        self.pto_count += 1
        oldest = min(self.unacked)
        record = self.unacked[oldest]
        probe = Packet(
            packet_number=self.next_pn,
            size=record.payload_bytes + self.config.header_bytes,
            payload_bytes=record.payload_bytes,
            offset=record.offset,
            is_retransmission=True,
        )
        self.next_pn += 1
        probe_record = SentPacket(
            packet_number=probe.packet_number,
            offset=record.offset,
            payload_bytes=record.payload_bytes,
            size=probe.size,
            delivered_at_send=self.delivered_bytes,
            is_retransmission=True,
        )
        self.sent[probe.packet_number] = probe_record
        self.unacked[probe.packet_number] = probe_record
        self.bytes_in_flight += probe.size
        self.cca.on_packet_sent(probe.packet_number, probe.size, sim.now)
        self._release(probe, sim.now, None)


def goodput_bps(
    delivered_payload_bytes: int,
    first_send_time: Optional[SimTime],
    last_in_order_time: Optional[SimTime],
) -> Optional[float]:
    """Application payload bits per second over the transfer interval."""
    if first_send_time is None or last_in_order_time is None:
        return None
    elapsed_ns = last_in_order_time - first_send_time
    if elapsed_ns <= 0:
        return None
    return delivered_payload_bytes * 8 * 1e9 / elapsed_ns
