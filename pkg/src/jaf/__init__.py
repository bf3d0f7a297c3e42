"""Two-agent pick-and-place coordination engine.

A robot-side traffic-light commitment protocol, a gaze-dwell intent
predictor, a deterministic discrete-event simulator with a synthetic
human collaborator, a counterbalanced experiment harness with a
self-contained statistics toolkit, and a realtime session server for a
browser client in which a live human plays the collaborator.
"""

__version__ = "0.1.0"

from .core_model import (
    AgentId,
    BlockLabel,
    Condition,
    CONDITIONS,
    Event,
    EventKind,
    ScenarioConfig,
    WorkspaceState,
    ZoneId,
    apply_event,
    init_workspace,
    remaining_blocks,
)
from .gaze_intent import DwellConfig, DwellPredictor, GazeSample, PredictedIntent
from .human_model import HumanAgent, HumanParams, PickPolicy
from .robot_agent import GraspOutcome, RobotAgent, RobotConfig, RobotPhase, check_grasp, select_target
from .sim_engine import RunMetrics, Scenario, Trace, finalize_metrics, run

__all__ = [
    "AgentId", "BlockLabel", "Condition", "CONDITIONS", "Event", "EventKind",
    "ScenarioConfig", "WorkspaceState", "ZoneId", "apply_event", "init_workspace",
    "remaining_blocks", "DwellConfig", "DwellPredictor", "GazeSample", "PredictedIntent",
    "HumanAgent", "HumanParams", "PickPolicy", "GraspOutcome", "RobotAgent", "RobotConfig",
    "RobotPhase", "check_grasp", "select_target", "RunMetrics", "Scenario", "Trace",
    "finalize_metrics", "run", "__version__",
]
