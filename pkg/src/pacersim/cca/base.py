"""Shared congestion-controller contract and state snapshot types."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..engine import MS, SimTime

# Without a handshake the first flight has no RTT sample yet; transports
# conventionally assume a conservative initial estimate.
INITIAL_RTT_NS = 100 * MS


class Phase(str, Enum):
    SLOW_START = "SLOW_START"
    AVOIDANCE = "AVOIDANCE"
    RECOVERY = "RECOVERY"
    # BBR modes share the phase channel so traces stay one column wide.
    STARTUP = "STARTUP"
    DRAIN = "DRAIN"
    PROBE_BW = "PROBE_BW"


@dataclass(slots=True)
class AckSample:
    """Everything a controller may want to know about one processed ACK."""

    now: SimTime
    acked_bytes: int
    largest_acked: int
    largest_acked_sent_time: SimTime
    rtt_sample_ns: Optional[int]
    cwnd_limited: bool
    delivery_rate: Optional[float] = None  # bytes per second
    delivered_at_send: int = 0  # cumulative delivered bytes when largest-acked left
    delivered_total: int = 0


@dataclass(slots=True)
class CongestionState:
    """Point-in-time controller snapshot (also the rollback checkpoint unit)."""

    cwnd: float
    ssthresh: float
    phase: Phase
    recovery_start: SimTime
    pacing_rate: float
    smoothed_rtt: SimTime


class CongestionController:
    """Base class: cwnd bookkeeping, floors, and the pacing-rate contract.

    Loss-based controllers pace at `gain * cwnd / smoothed_rtt`; BBR
    overrides `pacing_rate()` with `pacing_gain * btl_bw`.
    """

    name = "base"

    def __init__(self, mss: int, initial_cwnd_packets: int = 10, pacing_gain: float = 1.25):
        self.mss = mss
        self.cwnd: float = float(initial_cwnd_packets * mss)
        self.ssthresh: float = float("inf")
        self.phase = Phase.SLOW_START
        self.recovery_start: SimTime = -1
        self.smoothed_rtt_ns: int = INITIAL_RTT_NS
        self.pacing_gain = pacing_gain
        self.congestion_event_count = 0

    @property
    def min_cwnd(self) -> float:
        return 2.0 * self.mss

    def clamp_cwnd(self) -> None:
        if self.cwnd < self.min_cwnd:
            self.cwnd = self.min_cwnd

    def congestion_window(self) -> int:
        return int(self.cwnd)

    def pacing_rate(self) -> float:
        """Bytes per second the pacer should target."""
        if self.smoothed_rtt_ns <= 0:
            raise ValueError("smoothed RTT must be positive")
        return self.pacing_gain * self.cwnd * 1e9 / self.smoothed_rtt_ns

    def on_packet_sent(self, packet_number: int, size: int, now: SimTime) -> None:
        pass

    def on_ack(self, sample: AckSample) -> None:
        raise NotImplementedError

    def on_packets_lost(self, lost_count: int) -> None:
        pass

    def on_congestion_event(self, now: SimTime, lost_count: int, largest_lost_sent_time: SimTime) -> bool:
        """Returns True when a new recovery period started."""
        raise NotImplementedError

    def in_recovery(self) -> bool:
        return self.phase is Phase.RECOVERY

    def snapshot(self) -> CongestionState:
        return CongestionState(
            cwnd=self.cwnd,
            ssthresh=self.ssthresh,
            phase=self.phase,
            recovery_start=self.recovery_start,
            pacing_rate=self.pacing_rate(),
            smoothed_rtt=self.smoothed_rtt_ns,
        )
