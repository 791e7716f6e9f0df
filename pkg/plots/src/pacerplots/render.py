"""Render pacersim CSV outputs into figures.

Three plot kinds, matching the simulator's CSV column contract:

* IPG_CDF   - empirical CDF of inter-packet gaps from `ipg.csv` (gap_ns)
* TRAIN_CDF - cumulative fraction of packets in trains up to each length,
              from `trains.csv` (length, train_count, packet_count)
* CWND_TRACE - congestion window over time from `cwnd.csv`
              (time_ns, cwnd_bytes, pacing_rate_Bps, phase)

Rendering is pure with respect to the inputs: the plotted data points are
a deterministic function of the CSV contents, and `render` returns them
keyed by series label so callers can assert on them directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """A CSV input does not carry the documented header."""


class EmptySeriesError(ValueError):
    """A CSV input has a valid header but no data rows."""


class PlotKind(str, Enum):
    IPG_CDF = "IPG_CDF"
    TRAIN_CDF = "TRAIN_CDF"
    CWND_TRACE = "CWND_TRACE"


@dataclass
class PlotSpec:
    kind: PlotKind
    inputs: list[Path]
    labels: list[str]
    output: Path
    x_bounds: Optional[tuple[float, float]] = None
    y_bounds: Optional[tuple[float, float]] = None
    log_x: bool = False

    def __post_init__(self):
        if len(self.inputs) != len(self.labels):
            raise ValueError(
                f"{len(self.inputs)} input file(s) but {len(self.labels)} label(s)")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def _read_rows(path: Path, required: Sequence[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [column for column in required if column not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}; header is {header}")
        rows = list(reader)
    if not rows:
        raise EmptySeriesError(f"{path}: no data rows")
    return rows


def ipg_cdf_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, ["gap_ns"])
    gaps = np.sort(np.array([int(r["gap_ns"]) for r in rows], dtype=np.int64))
    y = np.arange(1, gaps.size + 1) / gaps.size
    return gaps / 1e6, y  # milliseconds on the x axis


def train_cdf_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, ["length", "train_count", "packet_count"])
    lengths = np.array([int(r["length"]) for r in rows])
    packets = np.array([int(r["packet_count"]) for r in rows], dtype=np.float64)
    order = np.argsort(lengths)
    lengths, packets = lengths[order], packets[order]
    return lengths, np.cumsum(packets) / packets.sum()


def cwnd_trace_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, ["time_ns", "cwnd_bytes"])
    times = np.array([int(r["time_ns"]) for r in rows], dtype=np.int64)
    cwnd = np.array([int(r["cwnd_bytes"]) for r in rows], dtype=np.int64)
    return times / 1e9, cwnd  # seconds, bytes


_READERS = {
    PlotKind.IPG_CDF: ipg_cdf_points,
    PlotKind.TRAIN_CDF: train_cdf_points,
    PlotKind.CWND_TRACE: cwnd_trace_points,
}

_AXIS_LABELS = {
    PlotKind.IPG_CDF: ("inter-packet gap [ms]", "fraction of gaps"),
    PlotKind.TRAIN_CDF: ("packet train length", "fraction of packets"),
    PlotKind.CWND_TRACE: ("time [s]", "congestion window [bytes]"),
}


def render(spec: PlotSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Write the figure for `spec`; returns the plotted series per label.

    All inputs are read and validated before anything is written, so a
    schema error or an empty series leaves no output file behind.
    """
    reader = _READERS[spec.kind]
    series = {label: reader(path) for path, label in zip(spec.inputs, spec.labels)}

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        if spec.kind is PlotKind.TRAIN_CDF:
            ax.step(x, y, where="post", label=label)
        else:
            ax.plot(x, y, label=label, linewidth=1.0)
    x_label, y_label = _AXIS_LABELS[spec.kind]
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if spec.kind in (PlotKind.IPG_CDF, PlotKind.TRAIN_CDF):
        ax.set_ylim(0, 1.02)
    if spec.log_x:
        ax.set_xscale("log")
    if spec.x_bounds:
        ax.set_xlim(*spec.x_bounds)
    if spec.y_bounds:
        ax.set_ylim(*spec.y_bounds)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output)
    plt.close(fig)
    return series
