"""pacersim: a deterministic discrete-event simulator for transport pacing.

The library reproduces, at desk scale, the wire-level pacing behavior of
three QUIC-style pacing architectures (per-packet timestamps honored by a
kernel scheduler, self-timed user-space release, and a leaky bucket),
their interaction with congestion control (CUBIC with HyStart++ and an
optional spurious-loss rollback, NewReno, a reduced BBR), GSO batching in
burst and kernel-paced modes, and the FQ/ETF queueing disciplines, over an
emulated bottleneck path.
"""

from .analysis import (
    PacketLogEntry,
    RunMetrics,
    TrainStats,
    extract_trains,
    inter_packet_gaps,
    packets_per_train_cdf,
    precision,
    summarize_repetitions,
)
from .cca import (
    BbrCongestionControl,
    CubicCongestionControl,
    NewRenoCongestionControl,
    Phase,
    make_controller,
)
from .engine import MS, NS, SEC, US, PastEventError, RngStreams, SimTime, Simulator
from .pacing import ChainPacer, GsoConfig, GsoMode, LeakyBucket, PacerConfig, PacerStrategy, gso_emit
from .qdisc import (
    BottleneckConfig,
    EtfEgress,
    FifoEgress,
    FqEgress,
    NicModel,
    QdiscConfigError,
    TbfBottleneck,
)
from .runner import RunManifest, RunResult, SingleRun, run_once, run_scenario
from .scenario import ScenarioConfig, ScenarioValidationError, list_presets, preset_config
from .transport import (
    AckInfo,
    AppPattern,
    Packet,
    PacketKind,
    ProtocolViolationError,
    Receiver,
    Sender,
    TransferConfig,
    goodput_bps,
)

__version__ = "0.1.0"
