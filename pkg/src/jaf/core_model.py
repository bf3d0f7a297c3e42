"""Domain types and pure state transitions for the shared block workspace.

Two agents (a robot arm and a human) move labelled blocks from a start area
into two labelled placement zones. This module owns the authoritative
workspace record and the event vocabulary both the simulator and the live
session server drive it with. All transition functions are pure: they take a
state and return a new one, never mutating their input.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterator, Optional

BlockId = int


class ConfigError(ValueError):
    """Raised for an invalid scenario configuration."""


class TransitionError(ValueError):
    """Raised when an event is illegal in the current workspace state."""


class AgentId(str, Enum):
    ROBOT = "robot"
    HUMAN = "human"


class ZoneId(int, Enum):
    ZONE1 = 1
    ZONE2 = 2


class BlockLabel(int, Enum):
    ONE = 1
    TWO = 2


def zone_for_label(label: BlockLabel) -> ZoneId:
    """The placement zone a correctly-sorted block of this label belongs in."""
    return ZoneId.ZONE1 if label is BlockLabel.ONE else ZoneId.ZONE2


# ---------------------------------------------------------------------------
# Block state (tagged union)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtStart:
    def to_json(self) -> dict:
        return {"kind": "at_start"}


@dataclass(frozen=True)
class HeldBy:
    agent: AgentId

    def to_json(self) -> dict:
        return {"kind": "held", "agent": self.agent.value}


@dataclass(frozen=True)
class Placed:
    zone: ZoneId

    def to_json(self) -> dict:
        return {"kind": "placed", "zone": self.zone.value}


BlockState = AtStart | HeldBy | Placed

AT_START = AtStart()


@dataclass(frozen=True)
class BlockRecord:
    label: BlockLabel
    state: BlockState
    start_pos: tuple[float, float]  # cm, metadata only


@dataclass(frozen=True)
class Condition:
    """One cell of the 2x2 study design.

    ar_enabled:   the human can see the robot's yellow/red highlights.
    gaze_enabled: the robot receives the human's gaze stream.
    """

    ar_enabled: bool
    gaze_enabled: bool

    @property
    def name(self) -> str:
        return {
            (True, True): "both",
            (True, False): "ar",
            (False, True): "gaze",
            (False, False): "none",
        }[(self.ar_enabled, self.gaze_enabled)]

    @classmethod
    def from_name(cls, name: str) -> "Condition":
        try:
            return CONDITIONS[name]
        except KeyError:
            raise ConfigError(f"unknown condition {name!r}; expected one of {sorted(CONDITIONS)}")


CONDITIONS = {
    "both": Condition(ar_enabled=True, gaze_enabled=True),
    "ar": Condition(ar_enabled=True, gaze_enabled=False),
    "gaze": Condition(ar_enabled=False, gaze_enabled=True),
    "none": Condition(ar_enabled=False, gaze_enabled=False),
}

# Canonical presentation order for the four conditions.
CONDITION_ORDER = ("both", "ar", "gaze", "none")


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


class EventKind(str, Enum):
    SELECT = "select"
    ANNOUNCE = "announce"
    COMMIT = "commit"
    PICK_START = "pick_start"
    PICK_DONE = "pick_done"
    GRASP_CHECK = "grasp_check"
    PLACE_START = "place_start"
    PLACE_DONE = "place_done"
    GAZE_INTENT = "gaze_intent"
    HUMAN_PICK = "human_pick"
    HUMAN_PLACE = "human_place"
    CONFIRM_PICK = "confirm_pick"
    VIOLATION = "violation"
    ESTOP = "estop"
    RESET = "reset"
    TASK_COMPLETE = "task_complete"


@dataclass(frozen=True)
class Event:
    """A timestamped happening in a trial. agent is None for system events."""

    t: float
    agent: Optional[AgentId]
    kind: EventKind
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "agent": self.agent.value if self.agent else "system",
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Event":
        agent = None if rec["agent"] == "system" else AgentId(rec["agent"])
        return cls(t=rec["t"], agent=agent, kind=EventKind(rec["kind"]), payload=rec.get("payload", {}))


# ---------------------------------------------------------------------------
# Workspace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorkspaceState:
    """Snapshot of every block plus per-zone occupancy and the task clock.

    Invariants maintained by apply_event:
      * the set of block ids never changes (conservation);
      * each agent holds at most one block.
    """

    blocks: dict[BlockId, BlockRecord]
    zones: dict[ZoneId, Optional[AgentId]]
    clock: float = 0.0

    def block_state(self, block: BlockId) -> BlockState:
        return self.blocks[block].state

    def held_by(self, agent: AgentId) -> Optional[BlockId]:
        for bid, rec in self.blocks.items():
            if isinstance(rec.state, HeldBy) and rec.state.agent is agent:
                return bid
        return None

    def all_placed(self) -> bool:
        return all(isinstance(rec.state, Placed) for rec in self.blocks.values())

    def to_json(self) -> dict:
        return {
            "clock": self.clock,
            "blocks": {
                str(bid): {
                    "label": rec.label.value,
                    "state": rec.state.to_json(),
                    "start_pos": list(rec.start_pos),
                }
                for bid, rec in sorted(self.blocks.items())
            },
            "zones": {str(z.value): (a.value if a else None) for z, a in sorted(self.zones.items())},
        }

    def digest(self) -> str:
        return canonical_digest(self.to_json())


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def canonical_digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Scenario workspace construction
# ---------------------------------------------------------------------------

GRID_COLS = 5
GRID_PITCH_CM = 6.0


def default_positions(n_blocks: int) -> list[tuple[float, float]]:
    """Grid layout for block start positions (metadata; no geometry is used)."""
    return [
        (GRID_PITCH_CM * (i % GRID_COLS), GRID_PITCH_CM * (i // GRID_COLS))
        for i in range(n_blocks)
    ]


def default_labels(n_blocks: int) -> list[BlockLabel]:
    """Alternating label assignment (8/7 split for 15 blocks)."""
    return [BlockLabel.ONE if i % 2 == 0 else BlockLabel.TWO for i in range(n_blocks)]


@dataclass(frozen=True)
class ScenarioConfig:
    """Static description of the physical task: blocks, labels, positions."""

    n_blocks: int = 15
    labels: Optional[tuple[BlockLabel, ...]] = None
    positions: Optional[tuple[tuple[float, float], ...]] = None
    block_ids: Optional[tuple[BlockId, ...]] = None

    def resolved(self) -> tuple[tuple[BlockId, ...], tuple[BlockLabel, ...], tuple[tuple[float, float], ...]]:
        n = self.n_blocks
        if n < 0:
            raise ConfigError(f"n_blocks must be >= 0, got {n}")
        ids = self.block_ids if self.block_ids is not None else tuple(range(n))
        if len(ids) != n:
            raise ConfigError(f"{len(ids)} block ids for n_blocks={n}")
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate block ids in scenario config")
        labels = self.labels if self.labels is not None else tuple(default_labels(n))
        if len(labels) != n:
            raise ConfigError(f"{len(labels)} labels for n_blocks={n}")
        positions = self.positions if self.positions is not None else tuple(default_positions(n))
        if len(positions) != n:
            raise ConfigError(f"{len(positions)} positions for n_blocks={n}")
        return ids, labels, positions

    def to_json(self) -> dict:
        ids, labels, positions = self.resolved()
        return {
            "n_blocks": self.n_blocks,
            "block_ids": list(ids),
            "labels": [l.value for l in labels],
            "positions_cm": [list(p) for p in positions],
        }


def init_workspace(config: ScenarioConfig) -> WorkspaceState:
    """Fresh workspace: every block at start, zones free, clock at zero."""
    ids, labels, positions = config.resolved()
    blocks = {
        bid: BlockRecord(label=labels[i], state=AT_START, start_pos=tuple(positions[i]))
        for i, bid in enumerate(ids)
    }
    return WorkspaceState(blocks=blocks, zones={ZoneId.ZONE1: None, ZoneId.ZONE2: None}, clock=0.0)


def remaining_blocks(state: WorkspaceState) -> set[BlockId]:
    """Blocks still sitting at their start positions (available to pick)."""
    return {bid for bid, rec in state.blocks.items() if isinstance(rec.state, AtStart)}


# ---------------------------------------------------------------------------
# Event application
# ---------------------------------------------------------------------------


def _with_block(state: WorkspaceState, block: BlockId, new_state: BlockState) -> dict[BlockId, BlockRecord]:
    blocks = dict(state.blocks)
    blocks[block] = replace(blocks[block], state=new_state)
    return blocks


def _require_at_start(state: WorkspaceState, block: BlockId, what: str) -> None:
    if block not in state.blocks:
        raise TransitionError(f"{what}: unknown block {block}")
    st = state.blocks[block].state
    if not isinstance(st, AtStart):
        raise TransitionError(f"{what}: block {block} is not at start (state={st.to_json()['kind']})")


def apply_event(state: WorkspaceState, event: Event) -> WorkspaceState:
    """Apply one event, returning the successor workspace.

    Raises TransitionError naming the violated rule for illegal transitions.
    Events that carry no workspace effect (announcements, violations, ...)
    still advance the clock.
    """
    if event.t < state.clock - 1e-12:
        raise TransitionError(
            f"event at t={event.t} precedes workspace clock {state.clock} (events must be non-decreasing in t)"
        )
    kind = event.kind
    p = event.payload
    blocks = state.blocks
    zones = state.zones

    if kind is EventKind.HUMAN_PICK:
        block = p["block"]
        _require_at_start(state, block, "human pick")
        if state.held_by(AgentId.HUMAN) is not None:
            raise TransitionError("human pick: human already holds a block (one block at a time)")
        blocks = _with_block(state, block, HeldBy(AgentId.HUMAN))

    elif kind is EventKind.HUMAN_PLACE:
        block = p["block"]
        zone = ZoneId(p["zone"])
        st = blocks.get(block)
        if st is None or not (isinstance(st.state, HeldBy) and st.state.agent is AgentId.HUMAN):
            raise TransitionError(f"human place: block {block} is not held by the human")
        blocks = _with_block(state, block, Placed(zone))

    elif kind is EventKind.PICK_DONE:
        block = p["block"]
        _require_at_start(state, block, "robot pick")
        if state.held_by(AgentId.ROBOT) is not None:
            raise TransitionError("robot pick: robot already holds a block (one block at a time)")
        blocks = _with_block(state, block, HeldBy(AgentId.ROBOT))

    elif kind is EventKind.PLACE_START:
        zone = ZoneId(p["zone"])
        if zones[zone] is not None:
            raise TransitionError(f"place start: zone {zone.value} already occupied by {zones[zone].value}")
        zones = dict(zones)
        zones[zone] = AgentId.ROBOT

    elif kind is EventKind.PLACE_DONE:
        block = p["block"]
        zone = ZoneId(p["zone"])
        st = blocks.get(block)
        if st is None or not (isinstance(st.state, HeldBy) and st.state.agent is AgentId.ROBOT):
            raise TransitionError(f"robot place: block {block} is not held by the robot")
        blocks = _with_block(state, block, Placed(zone))
        zones = dict(zones)
        zones[zone] = None

    elif kind is EventKind.RESET:
        blocks = dict(blocks)
        for bid, rec in blocks.items():
            if isinstance(rec.state, HeldBy):
                blocks[bid] = replace(rec, state=AT_START)
        zones = {z: None for z in zones}

    # All other kinds (select/announce/commit/pick_start/grasp_check/
    # gaze_intent/confirm_pick/violation/estop/task_complete) only witness
    # activity; they do not move blocks.

    return WorkspaceState(blocks=blocks, zones=zones, clock=event.t)


def replay(state: WorkspaceState, events: Iterator[Event] | list[Event]) -> WorkspaceState:
    """Fold a whole event sequence over an initial workspace."""
    for event in events:
        state = apply_event(state, event)
    return state
