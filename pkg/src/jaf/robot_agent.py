"""Robot planner: target selection and the traffic-light commitment machine.

The robot cycles through: pick a random target block and drop zone, flag
both yellow (announce), and after a fixed warning period flag them red
(commit) and execute the pick-and-place motion. While a target is only
announced, a predicted user intent on the same block makes the robot pick
something else and restart the warning clock; once committed it proceeds
regardless. If the grasp closes on nothing the robot infers the user took
the block, aborts the place, and returns to select a new target.

The agent's knowledge of which blocks remain is menu-driven: it learns of
human picks only when told (confirmation), so it can commit to a block
that is already gone and discover that at grasp time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .core_model import (
    AgentId,
    AtStart,
    BlockId,
    Event,
    EventKind,
    WorkspaceState,
    ZoneId,
)
from .gaze_intent import PredictedIntent

BLOCK_WIDTH_M = 0.05


class GraspOutcome(str, Enum):
    GRASPED = "grasped"
    BLOCK_MISSING = "block_missing"


class RobotPhase(str, Enum):
    IDLE = "idle"
    ANNOUNCE = "announce"
    COMMITTED = "committed"
    MOVING_TO_PICK = "moving_to_pick"
    GRASP_CHECK = "grasp_check"
    PLACING = "placing"
    RETURNING = "returning"


# Phases in which the target is under the red no-touch commitment.
RED_PHASES = frozenset({RobotPhase.COMMITTED, RobotPhase.MOVING_TO_PICK})


@dataclass(frozen=True)
class RobotConfig:
    announce_duration: float = 3.0
    move_to_pick: float = 4.0
    grasp: float = 1.0
    place: float = 4.0
    return_home: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("announce_duration", "move_to_pick", "grasp", "place", "return_home"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    def cycle_time(self) -> float:
        """Wall time of one uncontested announce-pick-place-return cycle."""
        return self.announce_duration + self.move_to_pick + self.grasp + self.place + self.return_home


def select_target(
    remaining: set[BlockId], predicted: Optional[BlockId], rng: random.Random
) -> Optional[tuple[BlockId, ZoneId]]:
    """Uniformly random block from remaining minus the predicted user target,
    paired with a uniformly random drop zone. None when nothing is eligible
    (the robot yields rather than contest the user's only option)."""
    pool = sorted(remaining - {predicted}) if predicted is not None else sorted(remaining)
    if not pool:
        return None
    block = pool[rng.randrange(len(pool))]
    zone = ZoneId.ZONE1 if rng.randrange(2) == 0 else ZoneId.ZONE2
    return block, zone


def check_grasp(gripper_width: float, block_width: float = BLOCK_WIDTH_M) -> GraspOutcome:
    """Fully-closed fingers mean the block was gone before the gripper got there.

    The threshold is half a block width so sensor slack on a real gripper
    does not read as a missing block.
    """
    if gripper_width < 0 or block_width < 0:
        raise ValueError("gripper and block widths must be >= 0")
    return GraspOutcome.BLOCK_MISSING if gripper_width < block_width / 2 else GraspOutcome.GRASPED


_EPS = 1e-9


class RobotAgent:
    """Deterministic phase machine advanced by a single driver loop."""

    __slots__ = (
        "config", "rng", "phase", "target", "zone", "phase_started",
        "known_remaining", "cycle_seq", "holding",
    )

    def __init__(self, config: RobotConfig, block_ids, rng: Optional[random.Random] = None):
        self.config = config
        self.rng = rng if rng is not None else random.Random(config.rng_seed)
        self.phase = RobotPhase.IDLE
        self.target: Optional[BlockId] = None
        self.zone: Optional[ZoneId] = None
        self.phase_started = 0.0
        self.known_remaining: set[BlockId] = set(block_ids)
        self.cycle_seq = 0
        self.holding: Optional[BlockId] = None

    # -- knowledge updates -------------------------------------------------

    def note_block_taken(self, block: BlockId) -> None:
        """Menu confirmation (or own completed pick): block is off the table."""
        self.known_remaining.discard(block)

    def sync_known_remaining(self, at_start: set[BlockId]) -> None:
        """Re-align with ground truth, e.g. after an e-stop reset."""
        self.known_remaining = set(at_start)

    # -- commitment machine ------------------------------------------------

    def on_user_intent(self, intent: PredictedIntent, now: float) -> list[Event]:
        """React to a freshly fired user intent.

        Only an announced (yellow) target is negotiable: a conflict there
        triggers reselection and restarts the warning clock. A committed
        target never moves.
        """
        if self.phase is not RobotPhase.ANNOUNCE or intent.block != self.target:
            return []
        return self._reselect(now, exclude=intent.block)

    def _reselect(self, now: float, exclude: Optional[BlockId]) -> list[Event]:
        choice = select_target(self.known_remaining, exclude, self.rng)
        if choice is None:
            self.phase = RobotPhase.IDLE
            self.target = None
            self.zone = None
            return []
        return self._announce(choice, now)

    def _announce(self, choice: tuple[BlockId, ZoneId], now: float) -> list[Event]:
        self.target, self.zone = choice
        self.phase = RobotPhase.ANNOUNCE
        self.phase_started = now
        self.cycle_seq += 1
        payload = {"block": self.target, "zone": self.zone.value}
        return [
            Event(now, AgentId.ROBOT, EventKind.SELECT, dict(payload)),
            Event(now, AgentId.ROBOT, EventKind.ANNOUNCE, {**payload, "color": "yellow"}),
        ]

    def step(self, now: float, workspace: WorkspaceState, predicted: Optional[BlockId] = None) -> list[Event]:
        """Advance the phase machine to wall-clock `now`.

        `predicted` is the user intent latched at this instant (None when the
        gaze channel is off); it gates both fresh selection and the
        announce-to-commit transition, so a conflicting intent arriving on
        the same tick as the warning timeout wins and forces reselection.
        """
        events: list[Event] = []
        cfg = self.config

        if self.phase is RobotPhase.IDLE:
            if self.holding is None and self.known_remaining:
                choice = select_target(self.known_remaining, predicted, self.rng)
                if choice is not None:
                    events.extend(self._announce(choice, now))
            return events

        elapsed = now - self.phase_started

        if self.phase is RobotPhase.ANNOUNCE:
            if elapsed + _EPS < cfg.announce_duration:
                return events
            if self.target not in self.known_remaining or self.target == predicted:
                # The warning expired on a target the robot now knows is gone
                # (or the user just claimed): pick again instead of committing.
                events.extend(self._reselect(now, exclude=predicted))
                return events
            payload = {"block": self.target, "zone": self.zone.value, "color": "red",
                       "predicted": predicted}
            events.append(Event(now, AgentId.ROBOT, EventKind.COMMIT, payload))
            self.phase = RobotPhase.COMMITTED
            # Commitment is instantaneous; motion starts the same instant.
            events.append(Event(now, AgentId.ROBOT, EventKind.PICK_START, {"block": self.target}))
            self.phase = RobotPhase.MOVING_TO_PICK
            self.phase_started = now
            return events

        if self.phase is RobotPhase.MOVING_TO_PICK:
            if elapsed + _EPS >= cfg.move_to_pick:
                self.phase = RobotPhase.GRASP_CHECK
                self.phase_started = now
            return events

        if self.phase is RobotPhase.GRASP_CHECK:
            if elapsed + _EPS < cfg.grasp:
                return events
            # Fingers have closed: width reads full when the block was still
            # there, zero when someone beat us to it.
            still_there = isinstance(workspace.blocks[self.target].state, AtStart)
            width = BLOCK_WIDTH_M if still_there else 0.0
            outcome = check_grasp(width)
            events.append(Event(now, AgentId.ROBOT, EventKind.GRASP_CHECK,
                                {"block": self.target, "outcome": outcome.value}))
            self.note_block_taken(self.target)
            if outcome is GraspOutcome.GRASPED:
                events.append(Event(now, AgentId.ROBOT, EventKind.PICK_DONE, {"block": self.target}))
                events.append(Event(now, AgentId.ROBOT, EventKind.PLACE_START,
                                    {"block": self.target, "zone": self.zone.value}))
                self.holding = self.target
                self.phase = RobotPhase.PLACING
            else:
                # User took it: abort the place and go reselect.
                self.phase = RobotPhase.RETURNING
            self.phase_started = now
            return events

        if self.phase is RobotPhase.PLACING:
            if elapsed + _EPS >= cfg.place:
                events.append(Event(now, AgentId.ROBOT, EventKind.PLACE_DONE,
                                    {"block": self.target, "zone": self.zone.value}))
                self.holding = None
                self.phase = RobotPhase.RETURNING
                self.phase_started = now
            return events

        if self.phase is RobotPhase.RETURNING:
            if elapsed + _EPS >= cfg.return_home:
                self.phase = RobotPhase.IDLE
                self.target = None
                self.zone = None
                self.phase_started = now
            return events

        return events

    def estop_reset(self, now: float) -> None:
        """Emergency stop: drop everything and go home."""
        self.phase = RobotPhase.IDLE
        self.target = None
        self.zone = None
        self.holding = None
        self.phase_started = now

    # -- observability -----------------------------------------------------

    def highlight(self) -> Optional[dict]:
        """Current traffic-light display, or None when nothing is flagged."""
        if self.phase is RobotPhase.ANNOUNCE:
            return {"color": "yellow", "block": self.target, "zone": self.zone.value}
        if self.phase in (RobotPhase.COMMITTED, RobotPhase.MOVING_TO_PICK, RobotPhase.GRASP_CHECK):
            return {"color": "red", "block": self.target, "zone": self.zone.value}
        if self.phase is RobotPhase.PLACING:
            return {"color": "red", "block": None, "zone": self.zone.value}
        return None

    def moving_toward(self) -> Optional[BlockId]:
        """Target block while the arm is visibly reaching for it."""
        if self.phase in (RobotPhase.MOVING_TO_PICK, RobotPhase.GRASP_CHECK):
            return self.target
        return None
