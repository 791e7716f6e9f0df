"""Pacing strategies and GSO batching.

Three pacer styles are modeled behind one contract (given a send-ready
packet and the congestion controller's rate, decide when it may leave the
host):

* TIMESTAMP - an optimal departure timestamp is attached to every packet
  and the packet is handed downstream immediately; a timestamp-honoring
  qdisc (FQ/ETF) enforces the timing.  With a FIFO qdisc this degrades to
  unpaced transmission.
* INTERVAL - the same spacing arithmetic, but the sender itself holds each
  packet and releases it at the computed time, optionally with a normally
  distributed release jitter that models user-space timer inaccuracy.
* LEAKY_BUCKET - a credit bucket drained at the pacing rate; idle periods
  refill it, so a burst of up to `capacity` bytes follows inactivity.

Both interval-style pacers chain each timestamp off the previous one and
reset to `now` after falling behind, so neither accumulates burst credit
across idle gaps (that behavior is exclusive to the leaky bucket).

GSO batching groups segments into buffers of up to `max_segments`.  In
BURST mode the whole buffer is released at once; in PACED mode segment i
leaves at `i * segment_size / rate` after the buffer release, with the
rate snapshotted when the buffer was formed (a timestamp written into a
packet cannot change afterwards).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .engine import SimTime, interval_ns


class PacerStrategy(str, Enum):
    NONE = "NONE"
    TIMESTAMP = "TIMESTAMP"
    INTERVAL = "INTERVAL"
    LEAKY_BUCKET = "LEAKY_BUCKET"


class GsoMode(str, Enum):
    BURST = "BURST"
    PACED = "PACED"


@dataclass
class PacerConfig:
    strategy: PacerStrategy = PacerStrategy.NONE
    bucket_capacity_bytes: int = 16 * 1500
    release_jitter_stddev_ns: int = 0

    @property
    def attaches_txtime(self) -> bool:
        return self.strategy in (PacerStrategy.TIMESTAMP, PacerStrategy.INTERVAL)

    @property
    def holds_packets(self) -> bool:
        return self.strategy in (PacerStrategy.INTERVAL, PacerStrategy.LEAKY_BUCKET)


@dataclass
class GsoConfig:
    enabled: bool = False
    mode: GsoMode = GsoMode.BURST
    max_segments: int = 16
    segment_size: int = 1500


class ChainPacer:
    """Shared spacing arithmetic for the TIMESTAMP and INTERVAL styles.

    next_send_time(size, rate, now) returns max(now, previous + interval)
    and advances the chain by `size / rate`.  When the chain has fallen
    behind the clock it restarts at `now`: an idle sender gets no catch-up
    burst.
    """

    def __init__(self):
        self._chain: Optional[SimTime] = None

    def next_send_time(self, size: int, rate_bytes_per_sec: float, now: SimTime) -> SimTime:
        if rate_bytes_per_sec <= 0:
            raise ValueError("pacing rate must be positive")
        send_at = now if self._chain is None else max(now, self._chain)
        self._chain = send_at + interval_ns(size, rate_bytes_per_sec)
        return send_at

    def peek_next(self, now: SimTime) -> SimTime:
        """Earliest time the next packet may be scheduled, without advancing."""
        return now if self._chain is None else max(now, self._chain)

    def advance_from(self, anchor: SimTime, size: int, rate_bytes_per_sec: float) -> None:
        """Advance the chain one interval past `anchor` (a peeked send time).

        Keeping the grid anchored at intended times makes release jitter
        non-accumulating.
        """
        if rate_bytes_per_sec <= 0:
            raise ValueError("pacing rate must be positive")
        self._chain = anchor + interval_ns(size, rate_bytes_per_sec)

    def reset(self) -> None:
        self._chain = None


class ReleaseJitter:
    """Normal release jitter for user-space timers, floored at the decision time."""

    def __init__(self, stddev_ns: int, rng: np.random.Generator):
        self.stddev_ns = int(stddev_ns)
        self._rng = rng

    def apply(self, release: SimTime, now: SimTime) -> SimTime:
        if self.stddev_ns <= 0:
            return release
        jittered = release + int(round(self._rng.normal(0.0, self.stddev_ns)))
        return max(jittered, now)


@dataclass
class LeakyBucket:
    """Credit bucket: level refills linearly at leak_rate up to capacity."""

    capacity: int
    leak_rate: float  # bytes per second
    level: float = None  # type: ignore[assignment]
    last_update: SimTime = 0

    def __post_init__(self):
        if self.level is None:
            self.level = float(self.capacity)

    def _refill(self, now: SimTime) -> None:
        if now > self.last_update:
            self.level = min(
                float(self.capacity),
                self.level + self.leak_rate * (now - self.last_update) / 1e9,
            )
            self.last_update = now

    def set_rate(self, rate: float, now: SimTime) -> None:
        self._refill(now)
        if rate <= 0:
            raise ValueError("leak rate must be positive")
        self.leak_rate = rate

    def admit(self, size: int, now: SimTime) -> SimTime:
        """Deduct and return `now` if credit suffices, else the ready time.

        The caller retries at the returned time; credit is only consumed on
        the call that succeeds.
        """
        self._refill(now)
        if self.level + 1e-9 >= size:
            self.level -= size
            return now
        deficit = size - self.level
        wait_ns = int(np.ceil(deficit * 1e9 / self.leak_rate))
        return now + max(1, wait_ns)


def gso_emit(
    segment_sizes: list[int],
    config: GsoConfig,
    pacing_rate: float,
    now: SimTime,
) -> list[tuple[int, SimTime]]:
    """Release offsets for one GSO buffer: (segment index, release time).

    BURST releases every segment at `now` (only line-rate serialization
    separates them downstream).  PACED spreads segment i to
    `now + i * segment_size / pacing_rate` using the buffer's snapshotted
    rate.  A single-segment buffer is identical in both modes.
    """
    if not segment_sizes:
        raise ValueError("GSO buffer must contain at least one segment")
    if len(segment_sizes) > config.max_segments:
        raise ValueError(
            f"GSO buffer of {len(segment_sizes)} segments exceeds max_segments={config.max_segments}"
        )
    if config.mode is GsoMode.BURST:
        return [(i, now) for i in range(len(segment_sizes))]
    if pacing_rate <= 0:
        raise ValueError("pacing rate must be positive for paced GSO")
    releases = []
    offset = 0
    for i, size in enumerate(segment_sizes):
        releases.append((i, now + offset))
        offset += interval_ns(size, pacing_rate)
    return releases
