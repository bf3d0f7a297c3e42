"""Deterministic fixed-tick scheduler binding robot, human, and predictor.

One run advances both agents on a shared 30 Hz tick (the gaze sample
period), detects rule violations, executes e-stop resets, and produces a
replayable event trace plus per-trial metrics. Everything is a pure
function of the scenario and its master seed: the robot and human draw
from independent RNG streams derived from that seed, so identical
scenarios yield byte-identical traces.

Condition gating lives here: gaze samples reach the predictor only when
the condition grants the robot the gaze stream, and the human's
observations carry highlights only when AR is on.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .core_model import (
    AgentId,
    AtStart,
    BlockId,
    Condition,
    Event,
    EventKind,
    ScenarioConfig,
    WorkspaceState,
    ZoneId,
    apply_event,
    canonical_digest,
    canonical_json,
    init_workspace,
)
from .gaze_intent import DwellConfig, DwellPredictor
from .human_model import HumanAgent, HumanParams, make_observation
from .robot_agent import RED_PHASES, RobotAgent, RobotConfig, RobotPhase

_EPS = 1e-9


class SimulationTimeout(RuntimeError):
    """The run hit the non-termination guard before completing the task."""


class IncompleteTraceError(ValueError):
    """Metrics were requested for a trace that never completed the task."""


class ViolationKind(str, Enum):
    PICKING_ERROR = "picking_error"
    PLACING_ERROR = "placing_error"
    ZONE_INTRUSION = "zone_intrusion"  # reserved: proximity rule abstracted away


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    t: float
    block: Optional[BlockId] = None
    zone: Optional[ZoneId] = None


@dataclass(frozen=True)
class Scenario:
    """Everything one simulated trial depends on."""

    workspace: ScenarioConfig = field(default_factory=ScenarioConfig)
    robot: RobotConfig = field(default_factory=RobotConfig)
    human: HumanParams = field(default_factory=HumanParams)
    dwell: DwellConfig = field(default_factory=DwellConfig)
    condition: Condition = field(default_factory=lambda: Condition(True, True))
    master_seed: int = 0
    recovery_delay: float = 5.0
    time_limit: float = 3600.0
    confirm_menu: bool = True

    def to_json(self) -> dict:
        return {
            "workspace": self.workspace.to_json(),
            "robot": _jsonify(self.robot),
            "human": _jsonify(self.human),
            "dwell": _jsonify(self.dwell),
            "condition": self.condition.name,
            "master_seed": self.master_seed,
            "recovery_delay": self.recovery_delay,
            "time_limit": self.time_limit,
            "confirm_menu": self.confirm_menu,
        }

    def digest(self) -> str:
        return canonical_digest(self.to_json())


def _jsonify(obj) -> dict:
    out = {}
    for name, value in vars(obj).items() if not hasattr(obj, "__dataclass_fields__") else (
        (f, getattr(obj, f)) for f in obj.__dataclass_fields__
    ):
        out[name] = value.value if isinstance(value, Enum) else value
    return out


def derive_rng(master_seed: int, stream: str) -> random.Random:
    """Independent, reproducible RNG stream for one actor of one run."""
    return random.Random(f"{master_seed}/{stream}")


@dataclass(frozen=True)
class RunMetrics:
    completion_time: float
    picking_errors: int
    placing_errors: int
    estop_count: int
    predictor_accuracy: float

    def to_json(self) -> dict:
        return {
            "completion_time": self.completion_time,
            "picking_errors": self.picking_errors,
            "placing_errors": self.placing_errors,
            "estop_count": self.estop_count,
            "predictor_accuracy": self.predictor_accuracy,
        }


@dataclass
class Trace:
    """Ordered event record of one run, hashable and replayable."""

    events: list[Event]
    scenario_digest: str
    content_hash: str = ""
    final_state_digest: str = ""

    def compute_hash(self) -> str:
        h = hashlib.sha256()
        for ev in self.events:
            h.update(canonical_json(ev.to_json()).encode())
            h.update(b"\n")
        return h.hexdigest()

    def finalize(self, final_state: WorkspaceState) -> None:
        self.content_hash = self.compute_hash()
        self.final_state_digest = final_state.digest()

    def meta(self, extra: Optional[dict] = None) -> dict:
        rec = {
            "type": "meta",
            "scenario_digest": self.scenario_digest,
            "content_hash": self.content_hash,
            "final_state_digest": self.final_state_digest,
            "n_events": len(self.events),
        }
        if extra:
            rec.update(extra)
        return rec

    def to_jsonl(self, path: str | Path, extra_meta: Optional[dict] = None) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as f:
            f.write(canonical_json(self.meta(extra_meta)) + "\n")
            for ev in self.events:
                f.write(canonical_json(ev.to_json()) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> tuple["Trace", dict]:
        path = Path(path)
        events = []
        meta: dict = {}
        with path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("type") == "meta":
                    meta = rec
                else:
                    events.append(Event.from_json(rec))
        trace = cls(events=events, scenario_digest=meta.get("scenario_digest", ""))
        trace.content_hash = trace.compute_hash()
        trace.final_state_digest = meta.get("final_state_digest", "")
        return trace, meta


# ---------------------------------------------------------------------------
# Violation detection and e-stop
# ---------------------------------------------------------------------------


def detect_violation(
    workspace: WorkspaceState,
    robot_phase: RobotPhase,
    robot_target: Optional[BlockId],
    action: Event,
) -> Optional[Violation]:
    """Check one human action against the safety rules.

    Picking the robot's red-committed target is a picking error; placing
    into a zone the robot is actively placing into is a placing error.
    Grabbing a merely announced (yellow) target is a permitted override.
    """
    if action.kind is EventKind.HUMAN_PICK:
        block = action.payload["block"]
        if robot_phase in RED_PHASES and robot_target == block:
            return Violation(ViolationKind.PICKING_ERROR, action.t, block=block)
    elif action.kind is EventKind.HUMAN_PLACE:
        zone = ZoneId(action.payload["zone"])
        if workspace.zones.get(zone) is AgentId.ROBOT:
            return Violation(ViolationKind.PLACING_ERROR, action.t, zone=zone)
    return None


def execute_estop(
    workspace: WorkspaceState,
    robot: RobotAgent,
    human: HumanAgent,
    now: float,
    recovery_delay: float,
) -> tuple[WorkspaceState, list[Event]]:
    """Emergency stop: held blocks go back to start, both agents reset,
    and neither acts again until the recovery delay has passed."""
    estop = Event(now, None, EventKind.ESTOP, {})
    reset = Event(now, None, EventKind.RESET, {})
    workspace = apply_event(workspace, estop)
    workspace = apply_event(workspace, reset)
    robot.estop_reset(now)
    human.estop_reset(now, now + recovery_delay)
    return workspace, [estop, reset]


# ---------------------------------------------------------------------------
# The run loop
# ---------------------------------------------------------------------------


def run(
    scenario: Scenario,
    obs_hook: Optional[Callable] = None,
) -> tuple[RunMetrics, Trace]:
    """Simulate one trial to completion.

    Per tick: the human observes and acts, human actions are checked
    against the safety rules, the gaze sample feeds the predictor (gaze
    conditions only), any fresh intent reaches the robot before its own
    step, and finally the robot's commitment machine advances. Intent
    delivery before the robot step means a conflicting intent landing on
    the same tick as the warning timeout wins and forces reselection.

    obs_hook(now, observation) is a test instrumentation point.
    """
    condition = scenario.condition
    ws = init_workspace(scenario.workspace)
    ids, labels_seq, positions_seq = scenario.workspace.resolved()
    labels = dict(zip(ids, labels_seq))
    positions = dict(zip(ids, positions_seq))
    robot = RobotAgent(scenario.robot, ids, rng=derive_rng(scenario.master_seed, "robot"))
    human = HumanAgent(scenario.human, condition, labels, positions,
                       rng=derive_rng(scenario.master_seed, "human"))
    predictor = DwellPredictor(scenario.dwell)

    trace_events: list[Event] = []
    at_start: set[BlockId] = set(ids)
    placed_count = 0
    n_blocks = len(ids)
    frozen_until = -1.0
    dt = scenario.dwell.sample_period
    k = 0

    def record(ev: Event) -> None:
        nonlocal ws, placed_count
        ws = apply_event(ws, ev)
        trace_events.append(ev)
        if ev.kind in (EventKind.HUMAN_PICK, EventKind.PICK_DONE):
            at_start.discard(ev.payload["block"])
        elif ev.kind in (EventKind.HUMAN_PLACE, EventKind.PLACE_DONE):
            placed_count += 1
        elif ev.kind is EventKind.RESET:
            at_start.clear()
            at_start.update(b for b, rec in ws.blocks.items() if isinstance(rec.state, AtStart))

    while True:
        now = k * dt
        if now > scenario.time_limit:
            raise SimulationTimeout(
                f"run exceeded {scenario.time_limit}s simulated time (seed {scenario.master_seed})"
            )

        if now + _EPS >= frozen_until:
            obs = make_observation(at_start, ws.zones, robot, condition,
                                   human.perception, scenario.human, human.rng)
            if obs_hook is not None:
                obs_hook(now, obs)
            sample, human_events = human.step(now, obs)

            violated = False
            for ev in human_events:
                if ev.kind is EventKind.HUMAN_PICK:
                    latched = predictor.current_intent(now, at_start) if condition.gaze_enabled else None
                    predicted = latched.block if latched is not None else None
                    ev = replace(ev, payload={**ev.payload, "predicted": predicted})
                violation = detect_violation(ws, robot.phase, robot.target, ev)
                record(ev)
                if ev.kind is EventKind.CONFIRM_PICK and scenario.confirm_menu:
                    robot.note_block_taken(ev.payload["block"])
                elif ev.kind is EventKind.HUMAN_PICK and not scenario.confirm_menu:
                    robot.note_block_taken(ev.payload["block"])
                if violation is not None:
                    record(Event(now, None, EventKind.VIOLATION, {
                        "kind": violation.kind.value,
                        "block": violation.block,
                        "zone": violation.zone.value if violation.zone else None,
                    }))
                    ws, estop_events = execute_estop(ws, robot, human, now, scenario.recovery_delay)
                    trace_events.extend(estop_events)
                    at_start.clear()
                    at_start.update(b for b, rec in ws.blocks.items() if isinstance(rec.state, AtStart))
                    robot.sync_known_remaining(at_start)
                    predictor.reset()
                    frozen_until = now + scenario.recovery_delay
                    violated = True
                    break

            if not violated:
                if condition.gaze_enabled:
                    intent = predictor.ingest_sample(sample)
                    if intent is not None:
                        record(Event(now, None, EventKind.GAZE_INTENT, {"block": intent.block}))
                        for ev in robot.on_user_intent(intent, now):
                            record(ev)
                latched = predictor.current_intent(now, at_start) if condition.gaze_enabled else None
                predicted = latched.block if latched is not None else None
                for ev in robot.step(now, ws, predicted=predicted):
                    record(ev)

        if placed_count == n_blocks and robot.phase is RobotPhase.IDLE:
            record(Event(now, None, EventKind.TASK_COMPLETE, {}))
            break

        k += 1

    trace = Trace(events=trace_events, scenario_digest=scenario.digest())
    trace.finalize(ws)
    metrics = finalize_metrics(trace)
    return metrics, trace


def finalize_metrics(trace: Trace) -> RunMetrics:
    """Recompute a run's metrics purely from its event trace.

    Accuracy is the fraction of human picks whose latched predicted intent
    at pick time matched the picked block; runs with no picks (or with the
    gaze channel off) report 0.0.
    """
    if not trace.events or trace.events[-1].kind is not EventKind.TASK_COMPLETE:
        raise IncompleteTraceError("trace does not end with task completion")
    completion = trace.events[-1].t
    picking = placing = estops = picks = matched = 0
    for ev in trace.events:
        if ev.kind is EventKind.VIOLATION:
            if ev.payload["kind"] == ViolationKind.PICKING_ERROR.value:
                picking += 1
            elif ev.payload["kind"] == ViolationKind.PLACING_ERROR.value:
                placing += 1
        elif ev.kind is EventKind.ESTOP:
            estops += 1
        elif ev.kind is EventKind.HUMAN_PICK:
            picks += 1
            if ev.payload.get("predicted") == ev.payload["block"]:
                matched += 1
    return RunMetrics(
        completion_time=completion,
        picking_errors=picking,
        placing_errors=placing,
        estop_count=estops,
        predictor_accuracy=(matched / picks) if picks else 0.0,
    )


def verify_replay(trace: Trace, scenario: Scenario) -> bool:
    """Replaying the trace through the pure transitions must land on the
    exact final workspace the engine reported."""
    ws = init_workspace(scenario.workspace)
    for ev in trace.events:
        ws = apply_event(ws, ev)
    return ws.digest() == trace.final_state_digest
