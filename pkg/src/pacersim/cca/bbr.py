"""Reduced model-based congestion control in the BBR v1 style.

The fidelity target is pacing smoothness, not protocol compliance: the
controller keeps a windowed-max bottleneck-bandwidth estimate (window of
ten minimum RTTs), a windowed-min RTT (ten seconds), and drives the pacer
directly at pacing_gain * btl_bw.

Modes: STARTUP (gain 2.77) until the bandwidth estimate stops growing by
at least 25% for three consecutive delivery rounds, DRAIN (gain 1/2.77)
until the data in flight falls to the estimated BDP, then PROBE_BW cycling
through the gains [1.25, 0.75, 1, 1, 1, 1, 1, 1], one step per min RTT.
Loss does not reduce the window in this model (no ProbeRTT, no v2/v3
machinery).
"""

from __future__ import annotations

from collections import deque

from ..engine import SEC, SimTime
from .base import AckSample, CongestionController, Phase

STARTUP_GAIN = 2.77
DRAIN_GAIN = 1.0 / STARTUP_GAIN
PROBE_BW_GAINS = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
STARTUP_GROWTH_TARGET = 1.25
STARTUP_FULL_BW_ROUNDS = 3
BTL_BW_WINDOW_ROUNDS = 10
MIN_RTT_WINDOW_NS = 10 * SEC
CWND_GAIN = 2.0


class WindowedMax:
    """Sliding-window maximum over (position, value) samples: a monotone
    deque keeps candidates in decreasing value order, O(1) amortized."""

    def __init__(self):
        self._deque: deque[tuple[float, float]] = deque()

    def update(self, position: float, value: float, window: float) -> None:
        while self._deque and self._deque[-1][1] <= value:
            self._deque.pop()
        self._deque.append((position, value))
        self.prune(position, window)

    def prune(self, position: float, window: float) -> None:
        while self._deque and self._deque[0][0] < position - window:
            self._deque.popleft()

    @property
    def value(self) -> float:
        return self._deque[0][1] if self._deque else 0.0


class WindowedMin:
    """Sliding-window minimum, mirror of WindowedMax."""

    def __init__(self):
        self._deque: deque[tuple[float, float]] = deque()

    def update(self, position: float, value: float, window: float) -> None:
        while self._deque and self._deque[-1][1] >= value:
            self._deque.pop()
        self._deque.append((position, value))
        self.prune(position, window)

    def prune(self, position: float, window: float) -> None:
        while self._deque and self._deque[0][0] < position - window:
            self._deque.popleft()

    @property
    def value(self) -> float:
        return self._deque[0][1] if self._deque else 0.0

    @property
    def empty(self) -> bool:
        return not self._deque


class BbrCongestionControl(CongestionController):
    name = "bbr"

    def __init__(self, mss: int, initial_cwnd_packets: int = 10, pacing_gain: float = STARTUP_GAIN):
        super().__init__(mss, initial_cwnd_packets, pacing_gain)
        self.phase = Phase.STARTUP
        self._btl_bw_filter = WindowedMax()
        self._min_rtt_filter = WindowedMin()
        self.pacing_gain = STARTUP_GAIN
        self.gain_cycle_index = 0
        self._cycle_stamp: SimTime = 0
        self.full_bw = 0.0
        self.full_bw_count = 0
        self.round_count = 0
        self._next_round_delivered = 0
        self.bytes_in_flight_hint = 0
        self.mode_transitions: list[tuple[SimTime, Phase]] = [(0, Phase.STARTUP)]

    # -- filters ----------------------------------------------------------

    @property
    def btl_bw(self) -> float:
        return self._btl_bw_filter.value

    @property
    def min_rtt_ns(self) -> int:
        if self._min_rtt_filter.empty:
            return self.smoothed_rtt_ns
        return int(self._min_rtt_filter.value)

    def _update_filters(self, sample: AckSample) -> None:
        if sample.rtt_sample_ns is not None:
            self._min_rtt_filter.update(sample.now, sample.rtt_sample_ns, MIN_RTT_WINDOW_NS)
        if sample.delivery_rate is not None and sample.delivery_rate > 0:
            self._btl_bw_filter.update(self.round_count, sample.delivery_rate, BTL_BW_WINDOW_ROUNDS)

    def _update_round(self, sample: AckSample) -> bool:
        if sample.delivered_at_send >= self._next_round_delivered:
            self.round_count += 1
            self._next_round_delivered = sample.delivered_total
            return True
        return False

    def bdp_bytes(self) -> float:
        return self.btl_bw * self.min_rtt_ns / 1e9

    # -- main update --------------------------------------------------------

    def on_ack(self, sample: AckSample) -> None:
        round_ended = self._update_round(sample)
        self._update_filters(sample)
        self.bytes_in_flight_hint = max(0, self.bytes_in_flight_hint - sample.acked_bytes)

        if self.phase is Phase.STARTUP:
            if round_ended:
                if self.btl_bw >= self.full_bw * STARTUP_GROWTH_TARGET:
                    self.full_bw = self.btl_bw
                    self.full_bw_count = 0
                else:
                    self.full_bw_count += 1
                if self.full_bw_count >= STARTUP_FULL_BW_ROUNDS:
                    self._enter(Phase.DRAIN, sample.now)
        elif self.phase is Phase.DRAIN:
            if self.bytes_in_flight_hint <= self.bdp_bytes():
                self._enter(Phase.PROBE_BW, sample.now)
        elif self.phase is Phase.PROBE_BW:
            if sample.now - self._cycle_stamp >= self.min_rtt_ns:
                self.gain_cycle_index = (self.gain_cycle_index + 1) % len(PROBE_BW_GAINS)
                self.pacing_gain = PROBE_BW_GAINS[self.gain_cycle_index]
                self._cycle_stamp = sample.now

        self._refresh_cwnd()

    def _enter(self, mode: Phase, now: SimTime) -> None:
        self.phase = mode
        self.mode_transitions.append((now, mode))
        if mode is Phase.DRAIN:
            self.pacing_gain = DRAIN_GAIN
        elif mode is Phase.PROBE_BW:
            self.gain_cycle_index = 0
            self.pacing_gain = PROBE_BW_GAINS[0]
            self._cycle_stamp = now

    def _refresh_cwnd(self) -> None:
        bdp = self.bdp_bytes()
        if bdp > 0:
            self.cwnd = max(CWND_GAIN * bdp, 4.0 * self.mss)
        self.clamp_cwnd()

    def on_packet_sent(self, packet_number: int, size: int, now: SimTime) -> None:
        self.bytes_in_flight_hint += size

    def on_congestion_event(self, now: SimTime, lost_count: int, largest_lost_sent_time: SimTime) -> bool:
        # Loss-tolerant by design; the window is model-driven.
        self.congestion_event_count += 1
        return False

    def pacing_rate(self) -> float:
        bw = self.btl_bw
        if bw <= 0:
            # Bootstrap before any delivery-rate sample exists.
            bw = self.cwnd * 1e9 / self.smoothed_rtt_ns
        return self.pacing_gain * bw
