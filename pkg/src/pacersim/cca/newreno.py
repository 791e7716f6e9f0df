"""NewReno: exponential slow start, one-MSS-per-RTT avoidance growth, and
a 0.5 multiplicative decrease applied at most once per recovery period.
"""

from __future__ import annotations

from ..engine import SimTime
from .base import AckSample, CongestionController, Phase


class NewRenoCongestionControl(CongestionController):
    name = "newreno"

    def __init__(self, mss: int, initial_cwnd_packets: int = 10, pacing_gain: float = 1.25, beta: float = 0.5):
        super().__init__(mss, initial_cwnd_packets, pacing_gain)
        self.beta = beta

    def on_ack(self, sample: AckSample) -> None:
        if self.phase is Phase.RECOVERY:
            if sample.largest_acked_sent_time > self.recovery_start:
                self.phase = Phase.AVOIDANCE
            else:
                return
        if not sample.cwnd_limited:
            return
        if self.phase is Phase.SLOW_START:
            self.cwnd += sample.acked_bytes
            if self.cwnd >= self.ssthresh:
                self.phase = Phase.AVOIDANCE
        else:
            self.cwnd += self.mss * sample.acked_bytes / self.cwnd
        self.clamp_cwnd()

    def on_congestion_event(self, now: SimTime, lost_count: int, largest_lost_sent_time: SimTime) -> bool:
        if self.recovery_start >= 0 and largest_lost_sent_time <= self.recovery_start:
            return False
        self.cwnd = max(self.cwnd * self.beta, self.min_cwnd)
        self.ssthresh = self.cwnd
        self.phase = Phase.RECOVERY
        self.recovery_start = now
        self.congestion_event_count += 1
        return True
