"""CUBIC congestion control with HyStart++ and an optional spurious-loss
checkpoint/rollback behavior.

The window growth follows W_cubic(t) = C*(t-K)^3 + W_max with W expressed
in MSS units and C = 0.4, so after a multiplicative decrease by beta the
plateau horizon is K = cbrt(W_max * (1 - beta) / C) seconds.

The rollback toggle models a loss-classification heuristic in which any
recovery episode involving fewer than `spurious_threshold` newly lost
packets is treated as spurious when the recovery ends: the controller
state checkpointed at the congestion event (cwnd, ssthresh, and the whole
cubic epoch) is restored verbatim.  Under light periodic loss this makes
the congestion window bounce between exactly two values, one rollback per
recovery, instead of decaying - a pathology worth studying because pacing
reduces per-event loss counts and therefore makes episodes look spurious
more often.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from ..engine import MS, SimTime
from .base import AckSample, CongestionController, Phase

CUBIC_C = 0.4
CUBIC_BETA = 0.7

# HyStart++ defaults (RFC 9406).
HYSTART_MIN_RTT_THRESH_NS = 4 * MS
HYSTART_MAX_RTT_THRESH_NS = 16 * MS
HYSTART_MIN_RTT_DIVISOR = 8
HYSTART_N_RTT_SAMPLE = 8
HYSTART_CSS_GROWTH_DIVISOR = 4
HYSTART_CSS_ROUNDS = 5


class HystartDecision(Enum):
    STAY = "STAY"
    EXIT_TO_CSS = "EXIT_TO_CSS"


@dataclass(slots=True)
class HystartState:
    enabled: bool = True
    in_css: bool = False
    rtt_sample_count: int = 0
    current_round_min_rtt: Optional[int] = None
    last_round_min_rtt: Optional[int] = None
    css_baseline_min_rtt: Optional[int] = None
    css_rounds_remaining: int = HYSTART_CSS_ROUNDS

    def start_new_round(self) -> None:
        self.last_round_min_rtt = self.current_round_min_rtt
        self.current_round_min_rtt = None
        self.rtt_sample_count = 0

    def observe_rtt(self, rtt_ns: int) -> None:
        self.rtt_sample_count += 1
        if self.current_round_min_rtt is None or rtt_ns < self.current_round_min_rtt:
            self.current_round_min_rtt = rtt_ns


def hystart_round_decision(state: HystartState) -> HystartDecision:
    """RTT-increase exit check, valid once a round has enough samples.

    Exit is signalled when the round's min RTT exceeds the previous round's
    min by clamp(last/8, 4 ms, 16 ms).
    """
    if (
        state.rtt_sample_count < HYSTART_N_RTT_SAMPLE
        or state.current_round_min_rtt is None
        or state.last_round_min_rtt is None
    ):
        return HystartDecision.STAY
    eta = min(
        HYSTART_MAX_RTT_THRESH_NS,
        max(HYSTART_MIN_RTT_THRESH_NS, state.last_round_min_rtt // HYSTART_MIN_RTT_DIVISOR),
    )
    if state.current_round_min_rtt >= state.last_round_min_rtt + eta:
        return HystartDecision.EXIT_TO_CSS
    return HystartDecision.STAY


@dataclass(slots=True)
class CubicEpoch:
    w_max: float  # bytes
    k_seconds: float
    epoch_start: SimTime

    def w_cubic(self, t_seconds: float, mss: int) -> float:
        w_max_mss = self.w_max / mss
        return (CUBIC_C * (t_seconds - self.k_seconds) ** 3 + w_max_mss) * mss


def cubic_k_seconds(w_max_bytes: float, cwnd_start_bytes: float, mss: int, beta: float = CUBIC_BETA) -> float:
    """Plateau horizon K for an epoch beginning at `cwnd_start`.

    After a beta decrease (cwnd_start = beta * w_max) this is
    cbrt(w_max_mss * (1 - beta) / C); when slow start ends without loss
    (cwnd_start = w_max) it collapses to zero.
    """
    deficit_mss = max(0.0, (w_max_bytes - cwnd_start_bytes) / mss)
    return (deficit_mss / CUBIC_C) ** (1.0 / 3.0)


@dataclass
class Checkpoint:
    state_cwnd: float
    state_ssthresh: float
    state_phase: Phase
    state_recovery_start: SimTime
    epoch: Optional[CubicEpoch]
    hystart: HystartState


class CubicCongestionControl(CongestionController):
    name = "cubic"

    def __init__(
        self,
        mss: int,
        initial_cwnd_packets: int = 10,
        pacing_gain: float = 1.25,
        beta: float = CUBIC_BETA,
        hystart_enabled: bool = True,
        rollback_enabled: bool = False,
        spurious_threshold: int = 3,
    ):
        super().__init__(mss, initial_cwnd_packets, pacing_gain)
        self.beta = beta
        self.epoch: Optional[CubicEpoch] = None
        self.hystart = HystartState(enabled=hystart_enabled)
        self.rollback_enabled = rollback_enabled
        self.spurious_threshold = spurious_threshold
        self.checkpoint: Optional[Checkpoint] = None
        self.lost_at_checkpoint = 0
        self.total_lost = 0
        self.rollback_count = 0
        # Round tracking: a round ends when the largest packet number sent
        # at its start has been acknowledged.
        self._round_end_pn = -1
        self._largest_sent_pn = -1
        # Packets sent before the latest recovery exit belong to the previous
        # avoidance stage and do not grow the window when acked.
        self.no_growth_before: SimTime = -1
        self.slow_start_exit_cwnd: Optional[float] = None
        self.slow_start_exit_time: Optional[SimTime] = None

    # -- sending/round bookkeeping --------------------------------------

    def on_packet_sent(self, packet_number: int, size: int, now: SimTime) -> None:
        self._largest_sent_pn = max(self._largest_sent_pn, packet_number)
        if self._round_end_pn < 0:
            self._round_end_pn = packet_number

    def _note_slow_start_exit(self, now: SimTime) -> None:
        if self.slow_start_exit_cwnd is None:
            self.slow_start_exit_cwnd = self.cwnd
            self.slow_start_exit_time = now

    # -- ACK processing ---------------------------------------------------

    def on_ack(self, sample: AckSample) -> None:
        if self.phase is Phase.RECOVERY:
            if sample.largest_acked_sent_time > self.recovery_start:
                self._end_recovery(sample.now)
            else:
                return
        if sample.largest_acked_sent_time <= self.no_growth_before:
            sample = replace(sample, cwnd_limited=False)
        if self.phase is Phase.SLOW_START:
            self._slow_start_ack(sample)
        else:
            self._avoidance_ack(sample)
        self.clamp_cwnd()

    def _slow_start_ack(self, sample: AckSample) -> None:
        hs = self.hystart
        if hs.enabled and sample.rtt_sample_ns is not None:
            hs.observe_rtt(sample.rtt_sample_ns)
        round_ended = sample.largest_acked >= self._round_end_pn
        if sample.cwnd_limited:
            growth = sample.acked_bytes
            if hs.enabled and hs.in_css:
                growth //= HYSTART_CSS_GROWTH_DIVISOR
            self.cwnd += growth
        if self.cwnd >= self.ssthresh:
            self._exit_slow_start(sample.now)
            return
        if hs.enabled:
            if hs.in_css:
                if (
                    hs.current_round_min_rtt is not None
                    and hs.css_baseline_min_rtt is not None
                    and hs.current_round_min_rtt < hs.css_baseline_min_rtt
                ):
                    # The RTT rise was spurious: abandon CSS.
                    hs.in_css = False
                    hs.css_rounds_remaining = HYSTART_CSS_ROUNDS
                elif round_ended:
                    hs.css_rounds_remaining -= 1
                    if hs.css_rounds_remaining <= 0:
                        self.ssthresh = self.cwnd
                        self._exit_slow_start(sample.now)
                        return
            elif hystart_round_decision(hs) is HystartDecision.EXIT_TO_CSS:
                hs.in_css = True
                hs.css_baseline_min_rtt = hs.current_round_min_rtt
                hs.css_rounds_remaining = HYSTART_CSS_ROUNDS
        if round_ended:
            hs.start_new_round()
            self._round_end_pn = self._largest_sent_pn

    def _exit_slow_start(self, now: SimTime) -> None:
        self.phase = Phase.AVOIDANCE
        self._note_slow_start_exit(now)
        if self.epoch is None:
            # No loss happened yet: the epoch starts flat at the current window.
            self.epoch = CubicEpoch(w_max=self.cwnd, k_seconds=0.0, epoch_start=now)

    def _avoidance_ack(self, sample: AckSample) -> None:
        if not sample.cwnd_limited:
            return
        if self.epoch is None:
            self.epoch = CubicEpoch(w_max=self.cwnd, k_seconds=0.0, epoch_start=sample.now)
        t = (sample.now + self.smoothed_rtt_ns - self.epoch.epoch_start) / 1e9
        target = self.epoch.w_cubic(t, self.mss)
        target = min(max(target, self.cwnd), 1.5 * self.cwnd)
        self.cwnd += (target - self.cwnd) * sample.acked_bytes / self.cwnd

    def _end_recovery(self, now: SimTime) -> None:
        if (
            self.rollback_enabled
            and self.checkpoint is not None
            and (self.total_lost - self.lost_at_checkpoint) < self.spurious_threshold
        ):
            self._restore_checkpoint()
            self.rollback_count += 1
        else:
            self.phase = Phase.AVOIDANCE
        self.checkpoint = None
        self.no_growth_before = now

    # -- loss/congestion events -------------------------------------------

    def on_packets_lost(self, lost_count: int) -> None:
        self.total_lost += lost_count

    def on_congestion_event(self, now: SimTime, lost_count: int, largest_lost_sent_time: SimTime) -> bool:
        if self.recovery_start >= 0 and largest_lost_sent_time <= self.recovery_start:
            return False
        if self.rollback_enabled:
            self.checkpoint = Checkpoint(
                state_cwnd=self.cwnd,
                state_ssthresh=self.ssthresh,
                state_phase=self.phase,
                state_recovery_start=self.recovery_start,
                epoch=replace(self.epoch) if self.epoch else None,
                hystart=replace(self.hystart),
            )
            self.lost_at_checkpoint = self.total_lost
        if self.phase is Phase.SLOW_START:
            self._note_slow_start_exit(now)
        w_max = self.cwnd
        self.cwnd = max(self.cwnd * self.beta, self.min_cwnd)
        self.ssthresh = self.cwnd
        self.epoch = CubicEpoch(
            w_max=w_max,
            k_seconds=cubic_k_seconds(w_max, self.cwnd, self.mss, self.beta),
            epoch_start=now,
        )
        self.phase = Phase.RECOVERY
        self.recovery_start = now
        self.congestion_event_count += 1
        return True

    def _restore_checkpoint(self) -> None:
        cp = self.checkpoint
        assert cp is not None
        self.cwnd = cp.state_cwnd
        self.ssthresh = cp.state_ssthresh
        self.phase = cp.state_phase
        self.recovery_start = cp.state_recovery_start
        self.epoch = replace(cp.epoch) if cp.epoch else None
        self.hystart = replace(cp.hystart)
