"""Run machinery: build a simulated sender/path/receiver from a scenario,
execute seeded repetitions, and export the per-run CSV artifacts plus a
summary and manifest.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import analysis
from .analysis import PacketLogEntry, RunMetrics
from .cca import BbrCongestionControl, CubicCongestionControl, make_controller
from .engine import MS, SEC, US, SimTime, Simulator
from .pacing import GsoConfig, GsoMode, PacerConfig, PacerStrategy
from .qdisc import (
    BottleneckConfig,
    EtfEgress,
    FifoEgress,
    FoldedNormalJitter,
    FqEgress,
    NicModel,
    TbfBottleneck,
)
from .scenario import ScenarioConfig
from .transport import (
    AckInfo,
    AppPattern,
    Packet,
    Receiver,
    Sender,
    TransferConfig,
    goodput_bps,
)

TOOL_VERSION = "pacersim 0.1.0"


@dataclass
class RunResult:
    seed: int
    metrics: RunMetrics
    wire_log: list[PacketLogEntry]
    cwnd_trace: list[tuple[int, int, float, str]]
    congestion_events: list[tuple[int, float, float]]
    bottleneck_drop_times: list[int]
    qdisc_drop_count: int
    packets_sent: int
    packets_delivered: int
    packets_in_flight: int
    completed: bool
    duration_ns: int
    slow_start_exit_cwnd: Optional[float] = None
    slow_start_exit_time: Optional[int] = None
    bbr_mode_transitions: list[tuple[int, str]] = field(default_factory=list)

    def conservation_holds(self) -> bool:
        accounted = (
            self.packets_delivered
            + len(self.bottleneck_drop_times)
            + self.qdisc_drop_count
            + self.packets_in_flight
        )
        return self.packets_sent == accounted

    def train_stats(self, threshold=analysis.DEFAULT_TRAIN_THRESHOLD_NS, since: SimTime = 0):
        log = self.wire_log if since == 0 else [e for e in self.wire_log if e.departure_time >= since]
        return analysis.extract_trains(log, threshold)

    def drops_before(self, t: SimTime) -> int:
        return sum(1 for d in self.bottleneck_drop_times if d <= t)


class SingleRun:
    """One seeded execution of a scenario: sender -> qdisc/NIC -> bottleneck
    -> receiver, with ACKs flowing back over the reverse delay."""

    def __init__(self, config: ScenarioConfig, seed: int):
        self.config = config
        self.sim = Simulator(seed=seed)
        self.seed = seed

        self.transfer = TransferConfig(
            object_size=config.object_size,
            mss=config.mss,
            header_bytes=config.header_bytes,
            ack_every_n=config.ack_every_n,
            max_ack_delay_ns=config.max_ack_delay_ns,
            loss_packet_threshold=config.loss_packet_threshold,
            loss_time_factor=config.loss_time_factor,
        )
        cca_kwargs = {
            "initial_cwnd_packets": config.initial_cwnd_packets,
            "pacing_gain": config.pacing_gain,
        }
        if config.cca_name == "cubic":
            cca_kwargs.update(
                hystart_enabled=config.hystart_enabled,
                rollback_enabled=config.rollback_enabled,
                spurious_threshold=config.spurious_threshold,
            )
        if config.cca_name == "bbr":
            cca_kwargs.pop("pacing_gain")
        self.cca = make_controller(config.cca_name, config.full_packet_size, **cca_kwargs)

        pacer_config = PacerConfig(
            strategy=PacerStrategy(config.pacer_strategy),
            bucket_capacity_bytes=config.bucket_capacity_segments * config.full_packet_size,
            release_jitter_stddev_ns=int(config.release_jitter_stddev_us * US),
        )
        gso_config = GsoConfig(
            enabled=config.gso_enabled,
            mode=GsoMode(config.gso_mode),
            max_segments=config.gso_max_segments,
            segment_size=config.full_packet_size,
        )
        app = AppPattern()
        if config.app_kind == "IDLE_CYCLES":
            app = AppPattern(on_ns=int(config.app_on_ms * MS), off_ns=int(config.app_off_ms * MS))

        self.wire_log: list[PacketLogEntry] = []
        self.cwnd_trace: list[tuple[int, int, float, str]] = []
        self.congestion_events: list[tuple[int, float, float]] = []
        self.bottleneck_drop_times: list[int] = []
        self.delivered_pns: set[int] = set()

        bottleneck_config = BottleneckConfig(
            rate_bps=config.rate_bps,
            buffer_bytes=config.buffer_bytes,
            one_way_delay_forward_ns=int(config.one_way_delay_forward_ms * MS),
            one_way_delay_reverse_ns=int(config.one_way_delay_reverse_ms * MS),
        )
        self.bottleneck = TbfBottleneck(
            self.sim, bottleneck_config, deliver=self._deliver, on_drop=self._on_bottleneck_drop
        )

        nic = NicModel()
        sw_jitter = FoldedNormalJitter(
            int(config.sw_dequeue_jitter_stddev_us * US), self.sim.rng.stream("qdisc-jitter")
        )
        lt_jitter = FoldedNormalJitter(
            int(config.launch_time_jitter_stddev_us * US), self.sim.rng.stream("nic-jitter")
        )
        if config.qdisc_kind == "FQ":
            self.egress = FqEgress(self.sim, nic, self._on_wire_departure, jitter=sw_jitter)
        elif config.qdisc_kind == "ETF":
            self.egress = EtfEgress(
                self.sim,
                nic,
                self._on_wire_departure,
                delta_ns=config.etf_delta_ns,
                offload=config.etf_offload,
                sw_jitter=sw_jitter,
                launch_time_jitter=lt_jitter,
            )
        else:
            self.egress = FifoEgress(self.sim, nic, self._on_wire_departure)

        self.receiver = Receiver(
            self.sim, self.transfer, send_ack=self._send_ack, on_complete=self._on_complete
        )
        self.sender = Sender(
            self.sim,
            self.transfer,
            self.cca,
            pacer_config,
            gso_config,
            submit=self.egress.submit,
            app_pattern=app,
        )
        self.sender.on_ack_processed = self._record_trace
        self.sender.on_congestion_event = self._record_congestion_event
        self._reverse_delay = bottleneck_config.one_way_delay_reverse_ns

    # -- wiring callbacks -----------------------------------------------------

    def _on_wire_departure(self, pkt: Packet, now: SimTime) -> None:
        # Capture point: bottleneck ingress, before any traffic shaping.
        self.wire_log.append(
            PacketLogEntry(
                packet_number=pkt.packet_number,
                size=pkt.size,
                intended_tx_time=pkt.intended_tx_time,
                departure_time=now,
            )
        )
        self.bottleneck.submit(pkt)

    def _on_bottleneck_drop(self, pkt: Packet, now: SimTime) -> None:
        self.bottleneck_drop_times.append(now)

    def _deliver(self, pkt: Packet, now: SimTime) -> None:
        self.delivered_pns.add(pkt.packet_number)
        self.receiver.on_data(pkt, now)

    def _send_ack(self, ack: AckInfo, now: SimTime) -> None:
        self.sim.schedule(
            now + self._reverse_delay,
            lambda sim, payload: self.sender.on_ack(payload, sim.now),
            payload=ack,
            target="ack-rx",
        )

    def _on_complete(self, now: SimTime) -> None:
        self.sim.stop()

    def _record_trace(self, now: SimTime) -> None:
        self.cwnd_trace.append(
            (now, self.cca.congestion_window(), self.cca.pacing_rate(), self.cca.phase.value)
        )

    def _record_congestion_event(self, now: SimTime, before: float, after: float) -> None:
        self.congestion_events.append((now, before, after))

    # -- execution ---------------------------------------------------------------

    def execute(self) -> RunResult:
        self.sender.start()
        self.sim.run_until(int(self.config.max_sim_seconds * SEC))
        completed = self.receiver.completion_time is not None

        ipg = analysis.inter_packet_gaps(self.wire_log)
        precision = analysis.precision(self.wire_log)
        goodput = None
        if completed:
            goodput = goodput_bps(
                self.receiver.config.object_size,
                self.sender.first_send_time,
                self.receiver.completion_time,
            )
        metrics = RunMetrics(
            goodput_bps=goodput,
            dropped_packets=len(self.bottleneck_drop_times),
            precision_ns=precision,
            ipg_samples=ipg,
            completed=completed,
        )
        packets_sent = len(self.sender.sent)
        packets_delivered = len(self.delivered_pns)
        in_flight = packets_sent - packets_delivered - len(self.bottleneck_drop_times) - self.egress.drop_count

        result = RunResult(
            seed=self.seed,
            metrics=metrics,
            wire_log=self.wire_log,
            cwnd_trace=self.cwnd_trace,
            congestion_events=self.congestion_events,
            bottleneck_drop_times=self.bottleneck_drop_times,
            qdisc_drop_count=self.egress.drop_count,
            packets_sent=packets_sent,
            packets_delivered=packets_delivered,
            packets_in_flight=in_flight,
            completed=completed,
            duration_ns=self.sim.now,
        )
        if isinstance(self.cca, CubicCongestionControl):
            result.slow_start_exit_cwnd = self.cca.slow_start_exit_cwnd
            result.slow_start_exit_time = self.cca.slow_start_exit_time
        if isinstance(self.cca, BbrCongestionControl):
            result.bbr_mode_transitions = [(t, m.value) for t, m in self.cca.mode_transitions]
        return result


def run_once(config: ScenarioConfig, seed: Optional[int] = None) -> RunResult:
    return SingleRun(config, config.seed if seed is None else seed).execute()


@dataclass
class RunManifest:
    scenario_hash: str
    scenario_name: str
    seeds: list[int]
    artifact_paths: list[str]
    tool_version: str = TOOL_VERSION

    def to_dict(self) -> dict:
        return {
            "scenario_hash": self.scenario_hash,
            "scenario_name": self.scenario_name,
            "seeds": self.seeds,
            "artifact_paths": self.artifact_paths,
            "tool_version": self.tool_version,
        }


def run_scenario(config: ScenarioConfig, out_dir: Path | str) -> RunManifest:
    """Execute every repetition, writing per-run CSVs plus summary.csv and
    manifest.json under `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = config.run_seeds()
    artifact_paths: list[str] = []
    metric_rows: list[tuple[int, RunMetrics]] = []
    goodputs: list[float] = []
    drops: list[float] = []
    precisions: list[float] = []

    for index, seed in enumerate(seeds):
        result = SingleRun(config, seed).execute()
        run_dir = out / f"run_{index:03d}"
        run_dir.mkdir(exist_ok=True)
        analysis.write_ipg_csv(run_dir / "ipg.csv", result.metrics.ipg_samples)
        analysis.write_trains_csv(run_dir / "trains.csv", result.train_stats())
        analysis.write_metrics_csv(run_dir / "metrics.csv", [(index, result.metrics)])
        analysis.write_cwnd_csv(run_dir / "cwnd.csv", result.cwnd_trace)
        for name in ("ipg.csv", "trains.csv", "metrics.csv", "cwnd.csv"):
            artifact_paths.append(str(run_dir / name))
        metric_rows.append((index, result.metrics))
        drops.append(float(result.metrics.dropped_packets))
        if result.metrics.goodput_bps is not None:
            goodputs.append(result.metrics.goodput_bps)
        if result.metrics.precision_ns is not None:
            precisions.append(result.metrics.precision_ns)

    analysis.write_metrics_csv(out / "metrics.csv", metric_rows)
    artifact_paths.append(str(out / "metrics.csv"))
    _write_summary(out / "summary.csv", goodputs, drops, precisions, len(seeds))
    artifact_paths.append(str(out / "summary.csv"))

    manifest = RunManifest(
        scenario_hash=config.scenario_hash(),
        scenario_name=config.name,
        seeds=seeds,
        artifact_paths=artifact_paths,
    )
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _write_summary(path: Path, goodputs, drops, precisions, n_runs: int) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["metric", "mean", "std", "n"])
        for name, values in (("goodput_bps", goodputs), ("drops", drops), ("precision_ns", precisions)):
            if values:
                mean, std = analysis.summarize_repetitions(values)
                writer.writerow([name, f"{mean:.3f}", f"{std:.3f}", len(values)])
            else:
                writer.writerow([name, "", "", 0])


def default_output_dir() -> Path:
    return Path(os.environ.get("PACERSIM_OUT", "pacersim-out"))
