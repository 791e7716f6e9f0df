"""Wire metrics computed from packet logs: inter-packet gaps, packet
trains, packets-per-train-length CDFs, pacing precision, and the CSV
export formats shared with the plotting tools.

A packet train is a maximal run of consecutive wire departures whose
adjacent gaps are below a threshold (default 0.1 ms); a train of length
one is a single, well-paced packet. Precision is the population standard
deviation of (departure - intended) transmit times, which is invariant to
any constant clock offset between the sender and the capture point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import MS, SimTime

DEFAULT_TRAIN_THRESHOLD_NS = MS // 10  # 0.1 ms


@dataclass(slots=True)
class PacketLogEntry:
    packet_number: int
    size: int
    intended_tx_time: Optional[SimTime]
    departure_time: SimTime
    dropped: bool = False


@dataclass
class TrainStats:
    threshold: SimTime
    train_lengths: list[int] = field(default_factory=list)

    @property
    def total_packets(self) -> int:
        return sum(self.train_lengths)

    def packets_in_trains_of_at_least(self, length: int) -> float:
        """Fraction of packets belonging to trains of >= `length` packets."""
        total = self.total_packets
        if total == 0:
            return 0.0
        return sum(n for n in self.train_lengths if n >= length) / total

    def packets_in_trains_of_at_most(self, length: int) -> float:
        total = self.total_packets
        if total == 0:
            return 0.0
        return sum(n for n in self.train_lengths if n <= length) / total

    @property
    def singleton_fraction(self) -> float:
        return self.packets_in_trains_of_at_most(1)


@dataclass
class RunMetrics:
    goodput_bps: Optional[float]
    dropped_packets: int
    precision_ns: Optional[float]
    ipg_samples: list[int]
    completed: bool = True


def departure_times(log: Sequence[PacketLogEntry]) -> np.ndarray:
    return np.asarray([e.departure_time for e in log if not e.dropped], dtype=np.int64)


def inter_packet_gaps(log: Sequence[PacketLogEntry]) -> list[int]:
    """Gaps between consecutive non-dropped departures; count = packets - 1."""
    times = departure_times(log)
    return np.diff(times).tolist() if times.size > 1 else []


def extract_trains(
    log: Sequence[PacketLogEntry],
    threshold: SimTime = DEFAULT_TRAIN_THRESHOLD_NS,
    inclusive: bool = False,
) -> TrainStats:
    """Split the departure sequence into maximal trains.

    Membership uses a strict `gap < threshold` comparison; `inclusive=True`
    switches to `gap <= threshold` for sensitivity checks.
    """
    times = departure_times(log)
    stats = TrainStats(threshold=threshold)
    if times.size == 0:
        return stats
    gaps = np.diff(times)
    in_train = (gaps <= threshold) if inclusive else (gaps < threshold)
    length = 1
    for joined in in_train:
        if joined:
            length += 1
        else:
            stats.train_lengths.append(length)
            length = 1
    stats.train_lengths.append(length)
    return stats


def packets_per_train_cdf(stats: TrainStats) -> list[tuple[int, float]]:
    """(train length, cumulative fraction of *packets* in trains <= length)."""
    if not stats.train_lengths:
        raise ValueError("empty train statistics")
    total = stats.total_packets
    counts: dict[int, int] = {}
    for n in stats.train_lengths:
        counts[n] = counts.get(n, 0) + n
    cdf = []
    cumulative = 0
    for length in sorted(counts):
        cumulative += counts[length]
        cdf.append((length, cumulative / total))
    return cdf


def precision(log: Sequence[PacketLogEntry]) -> Optional[float]:
    """Population std of (departure - intended) over stamped, delivered packets.

    Returns None with fewer than two usable samples.
    """
    diffs = np.asarray(
        [
            e.departure_time - e.intended_tx_time
            for e in log
            if not e.dropped and e.intended_tx_time is not None
        ],
        dtype=np.float64,
    )
    if diffs.size < 2:
        return None
    return float(np.std(diffs))


def summarize_repetitions(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and sample standard deviation (ddof=1; 0.0 for one run)."""
    if len(values) == 0:
        raise ValueError("at least one run required")
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


# --- CSV export (column names and units are a stable interface) ---------


def write_ipg_csv(path: Path, gaps: Iterable[int]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gap_ns"])
        for gap in gaps:
            writer.writerow([int(gap)])


def write_trains_csv(path: Path, stats: TrainStats) -> None:
    counts: dict[int, int] = {}
    for n in stats.train_lengths:
        counts[n] = counts.get(n, 0) + 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["length", "train_count", "packet_count"])
        for length in sorted(counts):
            writer.writerow([length, counts[length], length * counts[length]])


def write_metrics_csv(path: Path, rows: Sequence[tuple[int, RunMetrics]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "goodput_bps", "drops", "precision_ns"])
        for run_id, m in rows:
            goodput = f"{m.goodput_bps:.3f}" if m.goodput_bps is not None else ""
            prec = str(int(round(m.precision_ns))) if m.precision_ns is not None else ""
            writer.writerow([run_id, goodput, m.dropped_packets, prec])


def write_cwnd_csv(path: Path, trace: Sequence[tuple[int, int, float, str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_ns", "cwnd_bytes", "pacing_rate_Bps", "phase"])
        for time_ns, cwnd, rate, phase in trace:
            writer.writerow([int(time_ns), int(cwnd), f"{rate:.3f}", phase])
