"""Declarative scenario configuration: JSON schema, validation, presets.

A scenario file is a JSON object with the sections `transfer`, `cca`,
`pacer`, `gso`, `qdisc`, `path`, `app_pattern` plus top-level
`repetitions` and `seed`.  Every field has a default; unknown keys are
rejected so typos fail loudly.  See the preset catalog for complete
examples of each supported configuration family.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .engine import MS, US


class ScenarioValidationError(ValueError):
    """A scenario file violates the schema or a cross-field constraint."""


_ALLOWED = {
    "": {"transfer", "cca", "pacer", "gso", "qdisc", "path", "app_pattern",
         "repetitions", "seed", "max_sim_seconds", "name"},
    "transfer": {"object_size", "mss", "header_bytes", "ack_every_n",
                 "max_ack_delay_ms", "loss_packet_threshold", "loss_time_factor"},
    "cca": {"name", "pacing_gain", "hystart_enabled", "rollback_enabled",
            "spurious_threshold", "initial_cwnd_packets"},
    "pacer": {"strategy", "bucket_capacity_segments", "release_jitter_stddev_us"},
    "gso": {"enabled", "mode", "max_segments"},
    "qdisc": {"kind", "delta_us", "offload", "sw_dequeue_jitter_stddev_us",
              "launch_time_jitter_stddev_us"},
    "path": {"rate_bps", "buffer_bytes", "one_way_delay_forward_ms",
             "one_way_delay_reverse_ms"},
    "app_pattern": {"kind", "on_ms", "off_ms"},
}

_CCA_NAMES = {"cubic", "newreno", "bbr"}
_PACER_STRATEGIES = {"NONE", "TIMESTAMP", "INTERVAL", "LEAKY_BUCKET"}
_GSO_MODES = {"BURST", "PACED"}
_QDISC_KINDS = {"NONE", "FIFO", "FQ", "ETF"}
_APP_KINDS = {"CONTINUOUS", "IDLE_CYCLES"}


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    # transfer
    object_size: int = 100 * 1024 * 1024
    mss: int = 1460
    header_bytes: int = 40
    ack_every_n: int = 2
    max_ack_delay_ms: float = 25.0
    loss_packet_threshold: int = 3
    loss_time_factor: float = 9 / 8
    # cca
    cca_name: str = "cubic"
    pacing_gain: float = 1.25
    hystart_enabled: bool = True
    rollback_enabled: bool = False
    spurious_threshold: int = 3
    initial_cwnd_packets: int = 10
    # pacer
    pacer_strategy: str = "NONE"
    bucket_capacity_segments: int = 16
    release_jitter_stddev_us: float = 0.0
    # gso
    gso_enabled: bool = False
    gso_mode: str = "BURST"
    gso_max_segments: int = 16
    # qdisc
    qdisc_kind: str = "NONE"
    etf_delta_us: float = 200.0
    etf_offload: bool = False
    sw_dequeue_jitter_stddev_us: float = 80.0
    launch_time_jitter_stddev_us: float = 0.0
    # path
    rate_bps: float = 40e6
    buffer_bytes: int = 400_000
    one_way_delay_forward_ms: float = 20.0
    one_way_delay_reverse_ms: float = 20.0
    # app pattern
    app_kind: str = "CONTINUOUS"
    app_on_ms: float = 0.0
    app_off_ms: float = 0.0
    # run control
    repetitions: int = 20
    seed: int = 1
    max_sim_seconds: float = 120.0

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ScenarioConfig":
        _check_keys(raw, "")
        for section in ("transfer", "cca", "pacer", "gso", "qdisc", "path", "app_pattern"):
            if section in raw:
                if not isinstance(raw[section], dict):
                    raise ScenarioValidationError(f"section {section!r} must be an object")
                _check_keys(raw[section], section)

        cfg = cls()
        cfg.name = raw.get("name", cfg.name)
        t = raw.get("transfer", {})
        cfg.object_size = t.get("object_size", cfg.object_size)
        cfg.mss = t.get("mss", cfg.mss)
        cfg.header_bytes = t.get("header_bytes", cfg.header_bytes)
        cfg.ack_every_n = t.get("ack_every_n", cfg.ack_every_n)
        cfg.max_ack_delay_ms = t.get("max_ack_delay_ms", cfg.max_ack_delay_ms)
        cfg.loss_packet_threshold = t.get("loss_packet_threshold", cfg.loss_packet_threshold)
        cfg.loss_time_factor = t.get("loss_time_factor", cfg.loss_time_factor)
        c = raw.get("cca", {})
        cfg.cca_name = c.get("name", cfg.cca_name)
        cfg.pacing_gain = c.get("pacing_gain", cfg.pacing_gain)
        cfg.hystart_enabled = c.get("hystart_enabled", cfg.hystart_enabled)
        cfg.rollback_enabled = c.get("rollback_enabled", cfg.rollback_enabled)
        cfg.spurious_threshold = c.get("spurious_threshold", cfg.spurious_threshold)
        cfg.initial_cwnd_packets = c.get("initial_cwnd_packets", cfg.initial_cwnd_packets)
        p = raw.get("pacer", {})
        cfg.pacer_strategy = p.get("strategy", cfg.pacer_strategy)
        cfg.bucket_capacity_segments = p.get("bucket_capacity_segments", cfg.bucket_capacity_segments)
        cfg.release_jitter_stddev_us = p.get("release_jitter_stddev_us", cfg.release_jitter_stddev_us)
        g = raw.get("gso", {})
        cfg.gso_enabled = g.get("enabled", cfg.gso_enabled)
        cfg.gso_mode = g.get("mode", cfg.gso_mode)
        cfg.gso_max_segments = g.get("max_segments", cfg.gso_max_segments)
        q = raw.get("qdisc", {})
        cfg.qdisc_kind = q.get("kind", cfg.qdisc_kind)
        cfg.etf_delta_us = q.get("delta_us", cfg.etf_delta_us)
        cfg.etf_offload = q.get("offload", cfg.etf_offload)
        cfg.sw_dequeue_jitter_stddev_us = q.get("sw_dequeue_jitter_stddev_us", cfg.sw_dequeue_jitter_stddev_us)
        cfg.launch_time_jitter_stddev_us = q.get("launch_time_jitter_stddev_us", cfg.launch_time_jitter_stddev_us)
        pa = raw.get("path", {})
        cfg.rate_bps = pa.get("rate_bps", cfg.rate_bps)
        cfg.buffer_bytes = pa.get("buffer_bytes", cfg.buffer_bytes)
        cfg.one_way_delay_forward_ms = pa.get("one_way_delay_forward_ms", cfg.one_way_delay_forward_ms)
        cfg.one_way_delay_reverse_ms = pa.get("one_way_delay_reverse_ms", cfg.one_way_delay_reverse_ms)
        a = raw.get("app_pattern", {})
        cfg.app_kind = a.get("kind", cfg.app_kind)
        cfg.app_on_ms = a.get("on_ms", cfg.app_on_ms)
        cfg.app_off_ms = a.get("off_ms", cfg.app_off_ms)
        cfg.repetitions = raw.get("repetitions", cfg.repetitions)
        cfg.seed = raw.get("seed", cfg.seed)
        cfg.max_sim_seconds = raw.get("max_sim_seconds", cfg.max_sim_seconds)
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path: Path | str) -> "ScenarioConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioValidationError(f"scenario file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ScenarioValidationError("scenario file must contain a JSON object")
        return cls.from_dict(raw)

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        if self.object_size <= 0:
            raise ScenarioValidationError("transfer.object_size must be positive")
        if self.mss <= 0 or self.header_bytes < 0:
            raise ScenarioValidationError("transfer.mss must be positive and header_bytes non-negative")
        if self.ack_every_n < 1:
            raise ScenarioValidationError("transfer.ack_every_n must be at least 1")
        if self.cca_name not in _CCA_NAMES:
            raise ScenarioValidationError(
                f"cca.name must be one of {sorted(_CCA_NAMES)}, got {self.cca_name!r}")
        if self.pacer_strategy not in _PACER_STRATEGIES:
            raise ScenarioValidationError(
                f"pacer.strategy must be one of {sorted(_PACER_STRATEGIES)}, got {self.pacer_strategy!r}")
        if self.gso_mode not in _GSO_MODES:
            raise ScenarioValidationError(
                f"gso.mode must be one of {sorted(_GSO_MODES)}, got {self.gso_mode!r}")
        if self.qdisc_kind not in _QDISC_KINDS:
            raise ScenarioValidationError(
                f"qdisc.kind must be one of {sorted(_QDISC_KINDS)}, got {self.qdisc_kind!r}")
        if self.app_kind not in _APP_KINDS:
            raise ScenarioValidationError(
                f"app_pattern.kind must be one of {sorted(_APP_KINDS)}, got {self.app_kind!r}")
        if self.qdisc_kind == "ETF" and self.pacer_strategy != "TIMESTAMP":
            raise ScenarioValidationError(
                "the ETF qdisc schedules by per-packet timestamps and requires "
                f"pacer.strategy TIMESTAMP (got {self.pacer_strategy!r})")
        if self.gso_mode == "PACED" and not self.gso_enabled:
            raise ScenarioValidationError("gso.mode PACED requires gso.enabled")
        if self.app_kind == "IDLE_CYCLES" and (self.app_on_ms <= 0 or self.app_off_ms <= 0):
            raise ScenarioValidationError("IDLE_CYCLES needs positive on_ms and off_ms")
        if self.gso_max_segments < 1:
            raise ScenarioValidationError("gso.max_segments must be at least 1")
        if self.bucket_capacity_segments < 1:
            raise ScenarioValidationError("pacer.bucket_capacity_segments must be at least 1")
        if self.rate_bps <= 0 or self.buffer_bytes <= 0:
            raise ScenarioValidationError("path.rate_bps and path.buffer_bytes must be positive")
        if self.repetitions < 1:
            raise ScenarioValidationError("repetitions must be at least 1")
        if self.pacing_gain <= 0:
            raise ScenarioValidationError("cca.pacing_gain must be positive")

    # -- derived values -------------------------------------------------------

    @property
    def full_packet_size(self) -> int:
        return self.mss + self.header_bytes

    @property
    def max_ack_delay_ns(self) -> int:
        return int(self.max_ack_delay_ms * MS)

    @property
    def etf_delta_ns(self) -> int:
        return int(self.etf_delta_us * US)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "transfer": {
                "object_size": self.object_size,
                "mss": self.mss,
                "header_bytes": self.header_bytes,
                "ack_every_n": self.ack_every_n,
                "max_ack_delay_ms": self.max_ack_delay_ms,
                "loss_packet_threshold": self.loss_packet_threshold,
                "loss_time_factor": self.loss_time_factor,
            },
            "cca": {
                "name": self.cca_name,
                "pacing_gain": self.pacing_gain,
                "hystart_enabled": self.hystart_enabled,
                "rollback_enabled": self.rollback_enabled,
                "spurious_threshold": self.spurious_threshold,
                "initial_cwnd_packets": self.initial_cwnd_packets,
            },
            "pacer": {
                "strategy": self.pacer_strategy,
                "bucket_capacity_segments": self.bucket_capacity_segments,
                "release_jitter_stddev_us": self.release_jitter_stddev_us,
            },
            "gso": {
                "enabled": self.gso_enabled,
                "mode": self.gso_mode,
                "max_segments": self.gso_max_segments,
            },
            "qdisc": {
                "kind": self.qdisc_kind,
                "delta_us": self.etf_delta_us,
                "offload": self.etf_offload,
                "sw_dequeue_jitter_stddev_us": self.sw_dequeue_jitter_stddev_us,
                "launch_time_jitter_stddev_us": self.launch_time_jitter_stddev_us,
            },
            "path": {
                "rate_bps": self.rate_bps,
                "buffer_bytes": self.buffer_bytes,
                "one_way_delay_forward_ms": self.one_way_delay_forward_ms,
                "one_way_delay_reverse_ms": self.one_way_delay_reverse_ms,
            },
            "app_pattern": {
                "kind": self.app_kind,
                "on_ms": self.app_on_ms,
                "off_ms": self.app_off_ms,
            },
            "repetitions": self.repetitions,
            "seed": self.seed,
            "max_sim_seconds": self.max_sim_seconds,
        }

    def scenario_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def run_seeds(self) -> list[int]:
        """base .. base+N-1, so a single repetition can be re-run in isolation."""
        return [self.seed + i for i in range(self.repetitions)]


def _check_keys(raw: dict, section: str) -> None:
    allowed = _ALLOWED[section]
    unknown = set(raw) - allowed
    if unknown:
        where = f"section {section!r}" if section else "top level"
        raise ScenarioValidationError(
            f"unknown key(s) {sorted(unknown)} at {where}; allowed: {sorted(allowed)}")


# -- preset catalog ----------------------------------------------------------
#
# The reference path everywhere: 40 Mbit/s bottleneck, 40 ms minimum RTT,
# buffer of two bandwidth-delay products, 100 MiB transfer, 20 repetitions.

def _preset(name: str, description: str, **overrides) -> tuple[dict, str]:
    base: dict[str, Any] = {
        "name": name,
        "transfer": {},
        "cca": {"name": "cubic"},
        "pacer": {"strategy": "NONE"},
        "gso": {"enabled": False},
        "qdisc": {"kind": "NONE"},
        "path": {},
        "app_pattern": {"kind": "CONTINUOUS"},
        "repetitions": 20,
        "seed": 1,
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            base[key].update(value)
        else:
            base[key] = value
    return base, description


_PACER_SETUP = {
    "timestamp": {"pacer": {"strategy": "TIMESTAMP"}, "qdisc": {"kind": "FQ"}},
    "interval": {"pacer": {"strategy": "INTERVAL"}, "qdisc": {"kind": "NONE"}},
    "leaky": {"pacer": {"strategy": "LEAKY_BUCKET", "bucket_capacity_segments": 16},
              "qdisc": {"kind": "NONE"}},
}


def _build_presets() -> dict[str, tuple[dict, str]]:
    presets: dict[str, tuple[dict, str]] = {}
    for cca in ("cubic", "reno", "bbr"):
        cca_name = "newreno" if cca == "reno" else cca
        for pacer, setup in _PACER_SETUP.items():
            key = f"baseline-{cca}-{pacer}"
            presets[key] = _preset(
                key,
                f"{cca_name} with {pacer} pacing on the reference path",
                cca={"name": cca_name},
                **setup,
            )
    # spurious_threshold 12 keeps the per-episode loss counts of the rollback
    # limit cycle classified as spurious on the reference path, so the cycle
    # repeats instead of resolving into a genuine congestion event.
    presets["fq-rollback-on"] = _preset(
        "fq-rollback-on",
        "timestamp pacing via FQ with the spurious-loss checkpoint rollback enabled",
        cca={"name": "cubic", "rollback_enabled": True, "spurious_threshold": 12},
        pacer={"strategy": "TIMESTAMP"},
        qdisc={"kind": "FQ"},
    )
    presets["fq-rollback-off"] = _preset(
        "fq-rollback-off",
        "timestamp pacing via FQ with rollback disabled (the patched behavior)",
        cca={"name": "cubic", "rollback_enabled": False},
        pacer={"strategy": "TIMESTAMP"},
        qdisc={"kind": "FQ"},
    )
    for mode, gso in (("burst", {"enabled": True, "mode": "BURST", "max_segments": 16}),
                      ("off", {"enabled": False}),
                      ("paced", {"enabled": True, "mode": "PACED", "max_segments": 16})):
        key = f"gso-{mode}"
        presets[key] = _preset(
            key,
            f"GSO {mode} with timestamp pacing via FQ",
            cca={"name": "cubic"},
            pacer={"strategy": "TIMESTAMP"},
            qdisc={"kind": "FQ"},
            gso=gso,
        )
    presets["etf-sw"] = _preset(
        "etf-sw",
        "ETF qdisc in software with a 200 us delta, paced GSO",
        pacer={"strategy": "TIMESTAMP"},
        qdisc={"kind": "ETF", "delta_us": 200.0, "offload": False,
               "sw_dequeue_jitter_stddev_us": 270.0},
        gso={"enabled": True, "mode": "PACED", "max_segments": 16},
    )
    presets["etf-offload"] = _preset(
        "etf-offload",
        "ETF with launch-time offload in the NIC, paced GSO",
        pacer={"strategy": "TIMESTAMP"},
        qdisc={"kind": "ETF", "delta_us": 200.0, "offload": True,
               "launch_time_jitter_stddev_us": 260.0},
        gso={"enabled": True, "mode": "PACED", "max_segments": 16},
    )
    # Precision scenarios: jitter scales are calibration knobs chosen so the
    # measured ordering (FQ best, ETF middle, no qdisc worst) is stable; the
    # absolute values are documented, not claimed as ground truth.
    presets["precision-none"] = _preset(
        "precision-none",
        "user-space interval pacing only, 0.5 ms release jitter, no qdisc",
        pacer={"strategy": "INTERVAL", "release_jitter_stddev_us": 500.0},
        qdisc={"kind": "NONE"},
    )
    presets["precision-fq"] = _preset(
        "precision-fq",
        "timestamp pacing via FQ, default 80 us dequeue jitter",
        pacer={"strategy": "TIMESTAMP"},
        qdisc={"kind": "FQ", "sw_dequeue_jitter_stddev_us": 80.0},
    )
    presets["precision-etf"] = _preset(
        "precision-etf",
        "timestamp pacing via ETF (software), 270 us dequeue jitter",
        pacer={"strategy": "TIMESTAMP"},
        qdisc={"kind": "ETF", "delta_us": 200.0, "sw_dequeue_jitter_stddev_us": 270.0},
    )
    presets["leaky-idle-cycles"] = _preset(
        "leaky-idle-cycles",
        "leaky-bucket pacing with a 5 ms on / 5 ms off application pattern",
        pacer={"strategy": "LEAKY_BUCKET", "bucket_capacity_segments": 16},
        qdisc={"kind": "NONE"},
        app_pattern={"kind": "IDLE_CYCLES", "on_ms": 5.0, "off_ms": 5.0},
    )
    return presets


_PRESETS = _build_presets()


def list_presets() -> list[tuple[str, str]]:
    return [(name, desc) for name, (_, desc) in sorted(_PRESETS.items())]


def preset_config(name: str) -> ScenarioConfig:
    if name not in _PRESETS:
        known = ", ".join(sorted(_PRESETS))
        raise ScenarioValidationError(f"unknown preset {name!r}; available: {known}")
    raw, _ = _PRESETS[name]
    return ScenarioConfig.from_dict(json.loads(json.dumps(raw)))
