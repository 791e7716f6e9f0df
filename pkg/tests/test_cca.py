import random

import pytest

from pacersim.cca import (
    AckSample,
    BbrCongestionControl,
    CubicCongestionControl,
    HystartDecision,
    HystartState,
    NewRenoCongestionControl,
    Phase,
    cubic_k_seconds,
    hystart_round_decision,
    make_controller,
)
from pacersim.engine import MS, SEC

MSS = 1500


def ack(
    now,
    acked=2 * MSS,
    largest=0,
    sent_time=0,
    rtt=40 * MS,
    cwnd_limited=True,
    delivery_rate=None,
    delivered_at_send=0,
    delivered_total=0,
):
    return AckSample(
        now=now,
        acked_bytes=acked,
        largest_acked=largest,
        largest_acked_sent_time=sent_time,
        rtt_sample_ns=rtt,
        cwnd_limited=cwnd_limited,
        delivery_rate=delivery_rate,
        delivered_at_send=delivered_at_send,
        delivered_total=delivered_total,
    )


# --- CUBIC -------------------------------------------------------------


def test_cubic_k_formula_example():
    # w_max of 100 MSS with beta 0.7, C 0.4 -> K = cbrt(75) ~ 4.217 s
    k = cubic_k_seconds(100 * MSS, 70 * MSS, MSS)
    assert k == pytest.approx(75 ** (1 / 3), abs=1e-9)
    assert k == pytest.approx(4.217, abs=5e-4)


def test_cubic_k_formula_random_w_max_against_direct_evaluation():
    rng = random.Random(123)
    for _ in range(100):
        w_max_pkts = rng.uniform(4, 5000)
        w_max = w_max_pkts * MSS
        k = cubic_k_seconds(w_max, 0.7 * w_max, MSS)
        direct = (w_max_pkts * 0.3 / 0.4) ** (1 / 3)
        assert abs(k - direct) < 1e-6  # well below 1 us


def test_cubic_w_at_k_equals_w_max():
    cc = CubicCongestionControl(MSS)
    cc.cwnd = 100 * MSS
    cc.on_congestion_event(0, 1, largest_lost_sent_time=0)
    epoch = cc.epoch
    assert epoch.w_cubic(epoch.k_seconds, MSS) == pytest.approx(epoch.w_max, rel=1e-12)


def test_cubic_slow_start_growth():
    cc = CubicCongestionControl(MSS, hystart_enabled=False)
    cc.cwnd = 10 * MSS
    cc.on_ack(ack(now=1 * MS, acked=2 * MSS))
    assert cc.cwnd == 12 * MSS


def test_cubic_congestion_event_beta_reduction():
    cc = CubicCongestionControl(MSS)
    cc.cwnd = 100 * MSS
    assert cc.on_congestion_event(5 * MS, 1, largest_lost_sent_time=4 * MS)
    assert cc.cwnd == pytest.approx(70 * MSS)
    assert cc.epoch.w_max == pytest.approx(100 * MSS)
    assert cc.phase is Phase.RECOVERY


def test_cubic_once_per_recovery():
    cc = CubicCongestionControl(MSS)
    cc.cwnd = 100 * MSS
    cc.on_congestion_event(10 * MS, 1, largest_lost_sent_time=9 * MS)
    # Another loss of a packet sent before recovery began: no re-reduction.
    assert not cc.on_congestion_event(50 * MS, 1, largest_lost_sent_time=8 * MS)
    assert cc.cwnd == pytest.approx(70 * MSS)
    assert cc.congestion_event_count == 1


def test_cubic_checkpoint_equals_pre_reduction_state():
    cc = CubicCongestionControl(MSS, rollback_enabled=True)
    cc.cwnd = 100 * MSS
    cc.ssthresh = 150 * MSS
    cc.phase = Phase.AVOIDANCE
    cc.on_congestion_event(10 * MS, 1, largest_lost_sent_time=9 * MS)
    cp = cc.checkpoint
    assert cp.state_cwnd == 100 * MSS
    assert cp.state_ssthresh == 150 * MSS
    assert cp.state_phase is Phase.AVOIDANCE


def test_cubic_rollback_restores_exactly():
    cc = CubicCongestionControl(MSS, rollback_enabled=True, spurious_threshold=3)
    cc.cwnd = 100 * MSS
    cc.phase = Phase.AVOIDANCE
    cc.epoch = None
    cc.on_ack(ack(now=1 * MS, largest=1, sent_time=0))  # creates an epoch
    before = (cc.cwnd, cc.ssthresh, cc.epoch.w_max, cc.epoch.k_seconds, cc.epoch.epoch_start)

    cc.on_packets_lost(1)
    cc.on_congestion_event(10 * MS, 1, largest_lost_sent_time=9 * MS)
    cc.on_packets_lost(1)  # one more loss inside recovery: 1 < threshold 3
    # Recovery ends on an ack of a packet sent after recovery_start; the ack
    # itself is not cwnd-limited so no growth obscures the restored state.
    cc.on_ack(ack(now=60 * MS, largest=10, sent_time=20 * MS, cwnd_limited=False))

    after = (cc.cwnd, cc.ssthresh, cc.epoch.w_max, cc.epoch.k_seconds, cc.epoch.epoch_start)
    assert after == before
    assert cc.rollback_count == 1
    assert cc.phase is Phase.AVOIDANCE


def test_cubic_rollback_skipped_at_threshold():
    cc = CubicCongestionControl(MSS, rollback_enabled=True, spurious_threshold=3)
    cc.cwnd = 100 * MSS
    cc.phase = Phase.AVOIDANCE
    cc.on_packets_lost(1)
    cc.on_congestion_event(10 * MS, 1, largest_lost_sent_time=9 * MS)
    cc.on_packets_lost(3)  # reaches the threshold: genuine loss episode
    cc.on_ack(ack(now=60 * MS, largest=10, sent_time=20 * MS, cwnd_limited=False))
    assert cc.cwnd == pytest.approx(70 * MSS)
    assert cc.rollback_count == 0


def test_cubic_two_value_oscillation_under_periodic_single_loss():
    """A periodic single-packet-loss trace makes cwnd bounce between exactly
    two values once the rollback behavior latches."""
    cc = CubicCongestionControl(MSS, rollback_enabled=True, spurious_threshold=3, hystart_enabled=False)
    cc.cwnd = 100 * MSS
    cc.phase = Phase.AVOIDANCE
    now = 0
    pre_values = []
    post_values = []
    for _ in range(12):
        now += 100 * MS
        pre_values.append(round(cc.cwnd))
        cc.on_packets_lost(1)
        cc.on_congestion_event(now, 1, largest_lost_sent_time=now - MS)
        post_values.append(round(cc.cwnd))
        now += 100 * MS
        cc.on_ack(ack(now=now, largest=1, sent_time=now - 50 * MS, cwnd_limited=False))
    assert len(set(pre_values)) == 1
    assert len(set(post_values)) == 1
    assert pre_values[0] != post_values[0]


def test_cubic_without_rollback_never_grows_across_events():
    cc = CubicCongestionControl(MSS, rollback_enabled=False, hystart_enabled=False)
    cc.cwnd = 100 * MSS
    cc.phase = Phase.AVOIDANCE
    now = 0
    prev = cc.cwnd
    for _ in range(6):
        now += 200 * MS
        cc.on_congestion_event(now, 1, largest_lost_sent_time=now - MS)
        assert cc.cwnd <= prev
        prev = cc.cwnd
        now += 200 * MS
        cc.on_ack(ack(now=now, largest=1, sent_time=now - 50 * MS))
        prev = max(prev, cc.cwnd)


# --- HyStart++ ----------------------------------------------------------


def hystart_state(last_ms, current_ms, samples=8):
    return HystartState(
        enabled=True,
        rtt_sample_count=samples,
        current_round_min_rtt=current_ms * MS,
        last_round_min_rtt=last_ms * MS,
    )


def test_hystart_exit_when_rtt_rises_past_threshold():
    # last round 40 ms -> threshold clamp(5 ms, 4, 16) = 5 ms; 46 >= 45
    assert hystart_round_decision(hystart_state(40, 46)) is HystartDecision.EXIT_TO_CSS


def test_hystart_stays_below_threshold():
    assert hystart_round_decision(hystart_state(40, 41)) is HystartDecision.STAY


def test_hystart_needs_eight_samples():
    assert hystart_round_decision(hystart_state(40, 60, samples=7)) is HystartDecision.STAY


def test_hystart_clamp_bounds():
    # tiny last-round RTT: threshold floors at 4 ms
    assert hystart_round_decision(hystart_state(8, 12)) is HystartDecision.EXIT_TO_CSS
    assert hystart_round_decision(hystart_state(8, 11)) is HystartDecision.STAY
    # huge last-round RTT: threshold caps at 16 ms
    assert hystart_round_decision(hystart_state(400, 416)) is HystartDecision.EXIT_TO_CSS
    assert hystart_round_decision(hystart_state(400, 415)) is HystartDecision.STAY


# --- pacing rate ---------------------------------------------------------


def test_pacing_rate_formula():
    cc = CubicCongestionControl(MSS)
    cc.cwnd = 200_000
    cc.smoothed_rtt_ns = 40 * MS
    assert cc.pacing_rate() == pytest.approx(6.25e6)  # 1.25 * 200 kB / 40 ms


def test_pacing_rate_positive_at_cwnd_floor():
    cc = CubicCongestionControl(MSS)
    cc.cwnd = 0
    cc.clamp_cwnd()
    assert cc.cwnd == 2 * MSS
    assert cc.pacing_rate() > 0


def test_bbr_pacing_rate_probe_bw():
    cc = BbrCongestionControl(MSS)
    cc.phase = Phase.PROBE_BW
    cc._btl_bw_filter.update(0, 5e6, 10)
    cc.pacing_gain = 0.75
    assert cc.pacing_rate() == pytest.approx(3.75e6)


# --- BBR ------------------------------------------------------------------


def feed_bbr_round(cc, now, rate, rtt=40 * MS):
    """One delivery round: enough bookkeeping for round counting to advance."""
    delivered_at_send = cc._next_round_delivered
    cc.on_ack(
        ack(
            now=now,
            rtt=rtt,
            delivery_rate=rate,
            delivered_at_send=delivered_at_send,
            delivered_total=delivered_at_send + 30_000,
        )
    )


def test_bbr_startup_exits_to_drain_on_plateau():
    cc = BbrCongestionControl(MSS)
    now = 0
    for rate in (1e6, 2e6, 4e6, 5e6):  # still growing >= 25%
        now += 40 * MS
        feed_bbr_round(cc, now, rate)
    assert cc.phase is Phase.STARTUP
    for _ in range(3):  # three rounds without 25% growth
        now += 40 * MS
        feed_bbr_round(cc, now, 5.1e6)
    assert cc.phase is Phase.DRAIN
    assert cc.pacing_gain == pytest.approx(1 / 2.77)


def test_bbr_min_rtt_is_windowed_min():
    cc = BbrCongestionControl(MSS)
    now = 0
    for rtt in (42 * MS, 40 * MS, 41 * MS):
        now += 10 * MS
        cc.on_ack(ack(now=now, rtt=rtt))
    assert cc.min_rtt_ns == 40 * MS


def test_bbr_probe_bw_gain_cycle_advances_each_min_rtt():
    cc = BbrCongestionControl(MSS)
    cc._btl_bw_filter.update(0, 5e6, 10)
    cc._min_rtt_filter.update(0, 40 * MS, 10 * SEC)
    cc._enter(Phase.PROBE_BW, 0)
    assert cc.pacing_gain == 1.25
    cc.on_ack(ack(now=30 * MS))  # less than one min RTT: no advance
    assert cc.pacing_gain == 1.25
    cc.on_ack(ack(now=41 * MS))
    assert cc.pacing_gain == 0.75
    cc.on_ack(ack(now=82 * MS))
    assert cc.pacing_gain == 1.0


def test_bbr_pacing_rate_never_negative_and_piecewise_constant():
    cc = BbrCongestionControl(MSS)
    cc._btl_bw_filter.update(0, 5e6, 10)
    r1 = cc.pacing_rate()
    r2 = cc.pacing_rate()
    assert r1 == r2 > 0


# --- NewReno ----------------------------------------------------------------


def test_newreno_halves_and_grows_linearly():
    cc = NewRenoCongestionControl(MSS)
    cc.cwnd = 100 * MSS
    cc.phase = Phase.AVOIDANCE
    cc.on_congestion_event(10 * MS, 1, largest_lost_sent_time=9 * MS)
    assert cc.cwnd == pytest.approx(50 * MSS)
    cc.on_ack(ack(now=100 * MS, largest=5, sent_time=50 * MS, acked=int(cc.cwnd)))
    # one full cwnd of acked bytes grows avoidance by ~1 MSS
    assert cc.cwnd == pytest.approx(51 * MSS, rel=1e-6)


def test_make_controller_names():
    assert make_controller("cubic", MSS).name == "cubic"
    assert make_controller("newreno", MSS).name == "newreno"
    assert make_controller("bbr", MSS).name == "bbr"
    with pytest.raises(ValueError):
        make_controller("vegas", MSS)
