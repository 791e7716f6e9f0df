from .base import AckSample, CongestionController, CongestionState, Phase
from .bbr import BbrCongestionControl
from .cubic import (
    CubicCongestionControl,
    HystartDecision,
    HystartState,
    cubic_k_seconds,
    hystart_round_decision,
)
from .newreno import NewRenoCongestionControl


def make_controller(name: str, mss: int, **kwargs) -> CongestionController:
    name = name.lower()
    if name == "cubic":
        return CubicCongestionControl(mss, **kwargs)
    if name in ("newreno", "reno"):
        return NewRenoCongestionControl(mss, **kwargs)
    if name == "bbr":
        return BbrCongestionControl(mss, **kwargs)
    raise ValueError(f"unknown congestion control algorithm: {name!r}")


__all__ = [
    "AckSample",
    "BbrCongestionControl",
    "CongestionController",
    "CongestionState",
    "CubicCongestionControl",
    "HystartDecision",
    "HystartState",
    "NewRenoCongestionControl",
    "Phase",
    "cubic_k_seconds",
    "hystart_round_decision",
    "make_controller",
]
