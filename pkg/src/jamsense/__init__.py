"""Seeded simulator of collaborative spectrum sensing and jammer avoidance."""

__version__ = "0.1.0"

from .engine import (
    BatchResult,
    RunRecord,
    SimConfig,
    StepRecord,
    jammer_detection_ratio,
    jdr_curve,
    run,
    run_batch,
    transmission_success_rate,
    tsr_curve,
)
from .fusion import Belief, DecisionVector, Observation, SuperDecisionVector
from .jammers import JammerChain, init_chains, truth_snapshot
from .network import NeighborGraph, Placement, build_neighbor_graph, default_placement
from .policies import PolicyInput, PolicyKind, QParams
from .sensing import (
    DetectionParams,
    FadingKind,
    FalseAlarmTable,
    ProbabilityGrid,
    build_awgn_grid,
    build_rayleigh_grid,
    marcum_q,
    p_d_awgn,
    p_d_rayleigh_combined,
    p_d_rayleigh_single,
)

__all__ = [
    "BatchResult",
    "Belief",
    "DecisionVector",
    "DetectionParams",
    "FadingKind",
    "FalseAlarmTable",
    "JammerChain",
    "NeighborGraph",
    "Observation",
    "Placement",
    "PolicyInput",
    "PolicyKind",
    "ProbabilityGrid",
    "QParams",
    "RunRecord",
    "SimConfig",
    "StepRecord",
    "SuperDecisionVector",
    "build_awgn_grid",
    "build_neighbor_graph",
    "build_rayleigh_grid",
    "default_placement",
    "init_chains",
    "jammer_detection_ratio",
    "jdr_curve",
    "marcum_q",
    "p_d_awgn",
    "p_d_rayleigh_combined",
    "p_d_rayleigh_single",
    "run",
    "run_batch",
    "transmission_success_rate",
    "truth_snapshot",
    "tsr_curve",
]
