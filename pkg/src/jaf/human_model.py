"""Synthetic human collaborator driving one side of the joint task.

The human scans the workspace, settles on a block (gazing at it before
reaching, as people do), picks it, presses the confirmation menu, carries
it to the zone matching its label, and places it. What the human can see
depends on the experimental condition: highlight compliance only happens
when AR highlights are visible, and a human who knows the robot is
watching their eyes glances at the drop zone before and while placing,
which doubles as a safety check on the robot's whereabouts.

Every timing and probability here is a calibration knob, not ground
truth: the defaults were tuned so that batch simulations land in the
observed completion-time band and reproduce the observed ordering of
placing errors across conditions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .core_model import (
    AgentId,
    BlockId,
    BlockLabel,
    Condition,
    Event,
    EventKind,
    ZoneId,
    zone_for_label,
)
from .gaze_intent import GazeSample
from .robot_agent import RobotAgent

_EPS = 1e-9


class PickPolicy(str, Enum):
    NEAREST = "nearest"
    LEFT_TO_RIGHT = "left_to_right"
    UNIFORM_RANDOM = "uniform_random"


@dataclass(frozen=True)
class HumanParams:
    """Behavioral parameters. Times in seconds, probabilities in [0, 1].

    scan_time is the dominant pacing knob: how long the human spends
    watching/deciding between placements. gaze_noise > 0 corrupts the gaze
    stream with off-target bursts (the noisy-tracker preset for the
    prediction-accuracy harness).
    """

    pick_policy: PickPolicy = PickPolicy.NEAREST
    reach_time: float = 2.0
    reach_jitter: float = 0.5
    place_time: float = 2.0
    place_jitter: float = 0.5
    gaze_lead: float = 1.2
    p_comply_red: float = 0.95
    p_notice_motion: float = 0.4
    p_zone_check: float = 0.3
    rng_seed: int = 0
    # Pacing / plumbing knobs.
    scan_time: float = 40.0
    scan_jitter: float = 12.0
    rescan_time: float = 4.0
    rescan_jitter: float = 1.0
    retry_interval: float = 0.5
    confirm_delay: float = 1.0
    # Gaze-condition behavior: glance at the drop zone before/while placing.
    p_zone_glance: float = 0.85
    # Gaze stream corruption (probability per sample of starting an
    # off-target burst, and the burst length bounds).
    gaze_noise: float = 0.0
    noise_burst_min: float = 0.1
    noise_burst_max: float = 0.4
    # How often a wandering gaze actually rests on some block.
    wander_on_block: float = 0.35

    def __post_init__(self):
        for name in ("p_comply_red", "p_notice_motion", "p_zone_check", "p_zone_glance",
                     "gaze_noise", "wander_on_block"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("reach_time", "place_time", "gaze_lead", "scan_time", "rescan_time",
                     "confirm_delay", "retry_interval"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class HumanPhase(str, Enum):
    SCANNING = "scanning"
    FIXATING = "fixating"
    REACHING = "reaching"
    CARRYING = "carrying"
    PLACING = "placing"
    IDLE = "idle"


@dataclass
class HumanObservation:
    """What the human can currently perceive of the shared workspace.

    visible_highlights is None unless the condition renders AR highlights.
    robot_motion_cue is the robot's target as inferred from watching the
    arm move, already filtered through the notice probability.
    """

    remaining: set[BlockId]
    zones: dict[ZoneId, Optional[AgentId]]
    visible_highlights: Optional[dict] = None
    robot_motion_cue: Optional[BlockId] = None


class _Perception:
    """Sticky per-robot-cycle notice draws (one chance to spot each motion)."""

    __slots__ = ("cycle", "noticed")

    def __init__(self):
        self.cycle = -1
        self.noticed = False

    def motion_cue(self, robot: RobotAgent, p_notice: float, rng: random.Random) -> Optional[BlockId]:
        target = robot.moving_toward()
        if target is None:
            return None
        if robot.cycle_seq != self.cycle:
            self.cycle = robot.cycle_seq
            self.noticed = rng.random() < p_notice
        return target if self.noticed else None


def make_observation(
    remaining: set[BlockId],
    zones: dict[ZoneId, Optional[AgentId]],
    robot: RobotAgent,
    condition: Condition,
    perception: _Perception,
    params: HumanParams,
    rng: random.Random,
) -> HumanObservation:
    return HumanObservation(
        remaining=remaining,
        zones=zones,
        visible_highlights=robot.highlight() if condition.ar_enabled else None,
        robot_motion_cue=perception.motion_cue(robot, params.p_notice_motion, rng),
    )


def choose_block(
    params: HumanParams,
    obs: HumanObservation,
    rng: random.Random,
    positions: Optional[dict[BlockId, tuple[float, float]]] = None,
    origin: tuple[float, float] = (0.0, 0.0),
) -> Optional[BlockId]:
    """Pick the next block per policy, honoring what the human can see.

    A red-highlighted block is off limits when the compliance draw says the
    human respects it; a motion-cued block (arm headed for it) is avoided
    once noticed. Yellow highlights are not binding and are not avoided.
    """
    eligible = set(obs.remaining)
    hl = obs.visible_highlights
    if hl is not None and hl["color"] == "red" and hl["block"] is not None:
        if rng.random() < params.p_comply_red:
            eligible.discard(hl["block"])
    if obs.robot_motion_cue is not None:
        eligible.discard(obs.robot_motion_cue)
    if not eligible:
        return None
    pool = sorted(eligible)
    if params.pick_policy is PickPolicy.UNIFORM_RANDOM:
        return pool[rng.randrange(len(pool))]
    if positions is None:
        return pool[0]
    if params.pick_policy is PickPolicy.LEFT_TO_RIGHT:
        return min(pool, key=lambda b: (positions[b][0], positions[b][1], b))
    ox, oy = origin
    return min(pool, key=lambda b: ((positions[b][0] - ox) ** 2 + (positions[b][1] - oy) ** 2, b))


class HumanAgent:
    """Deterministic human state machine advanced by the driver loop."""

    def __init__(
        self,
        params: HumanParams,
        condition: Condition,
        labels: dict[BlockId, BlockLabel],
        positions: dict[BlockId, tuple[float, float]],
        rng: Optional[random.Random] = None,
    ):
        self.params = params
        self.condition = condition
        self.labels = labels
        self.positions = positions
        self.rng = rng if rng is not None else random.Random(params.rng_seed)
        if positions:
            xs = [p[0] for p in positions.values()]
            ys = [p[1] for p in positions.values()]
            self.origin = (sum(xs) / len(xs), min(ys) - 15.0)  # human stands on the near side
        else:
            self.origin = (0.0, 0.0)
        self.perception = _Perception()
        self.phase = HumanPhase.SCANNING
        self.target: Optional[BlockId] = None
        self.held: Optional[BlockId] = None
        self.drop_zone: Optional[ZoneId] = None
        self.phase_until = self._draw(params.scan_time, params.scan_jitter)
        self._pending_confirm: Optional[tuple[float, BlockId]] = None
        self._pursuit_comply: Optional[bool] = None
        self._carry_comply = False
        self._carry_check = False
        self._carry_glance = False
        self._burst_until = -1.0
        # The glance channel only exists when the human knows their gaze is
        # being read (they were briefed per condition).
        self._glance_active = condition.gaze_enabled

    # -- helpers -------------------------------------------------------------

    def _draw(self, mean: float, jitter: float) -> float:
        if jitter <= 0:
            return mean
        return max(0.05, mean + self.rng.uniform(-jitter, jitter))

    def _rescan(self, now: float) -> None:
        self.phase = HumanPhase.SCANNING
        self.target = None
        self._pursuit_comply = None
        self.phase_until = now + self._draw(self.params.rescan_time, self.params.rescan_jitter)

    def estop_reset(self, now: float, recovery_done: float) -> None:
        """Dropped block went back to start; regroup and rescan once released."""
        self.phase = HumanPhase.SCANNING
        self.target = None
        self.held = None
        self.drop_zone = None
        self._pending_confirm = None
        self._pursuit_comply = None
        self.phase_until = recovery_done + self._draw(self.params.rescan_time, self.params.rescan_jitter)

    # -- gaze emission ---------------------------------------------------------

    def _gaze(self, now: float, obs: HumanObservation) -> GazeSample:
        p = self.params
        if self.phase in (HumanPhase.FIXATING, HumanPhase.REACHING):
            if now < self._burst_until:
                return GazeSample(now, None)
            if p.gaze_noise > 0 and self.rng.random() < p.gaze_noise:
                self._burst_until = now + self.rng.uniform(p.noise_burst_min, p.noise_burst_max)
                return GazeSample(now, None)
            return GazeSample(now, self.target)
        if self.phase is HumanPhase.SCANNING and obs.remaining:
            if self.rng.random() < p.wander_on_block:
                pool = sorted(obs.remaining)
                return GazeSample(now, pool[self.rng.randrange(len(pool))])
        return GazeSample(now, None)

    # -- pursuit safety checks -------------------------------------------------

    def _pursuit_blocked(self, obs: HumanObservation) -> bool:
        """Mid-pursuit abort triggers: red landed on my target, or I noticed
        the arm heading for it."""
        if self.target not in obs.remaining:
            return True
        hl = obs.visible_highlights
        if hl is not None and hl["color"] == "red" and hl["block"] == self.target:
            if self._pursuit_comply is None:
                self._pursuit_comply = self.rng.random() < self.params.p_comply_red
            if self._pursuit_comply:
                return True
        if obs.robot_motion_cue == self.target:
            return True
        return False

    def _zone_is_red(self, obs: HumanObservation) -> bool:
        hl = obs.visible_highlights
        return hl is not None and hl["color"] == "red" and ZoneId(hl["zone"]) is self.drop_zone

    def _zone_physically_busy(self, obs: HumanObservation) -> bool:
        return obs.zones.get(self.drop_zone) is AgentId.ROBOT

    def _safe_to_place(self, obs: HumanObservation) -> bool:
        if self._carry_comply and self._zone_is_red(obs):
            return False
        if (self._carry_check or self._carry_glance) and self._zone_physically_busy(obs):
            return False
        return True

    # -- main step ---------------------------------------------------------------

    def step(self, now: float, obs: HumanObservation) -> tuple[GazeSample, list[Event]]:
        events: list[Event] = []
        p = self.params

        if self._pending_confirm is not None and now + _EPS >= self._pending_confirm[0]:
            events.append(Event(now, AgentId.HUMAN, EventKind.CONFIRM_PICK,
                                {"block": self._pending_confirm[1]}))
            self._pending_confirm = None

        if self.phase is HumanPhase.SCANNING:
            if not obs.remaining and self.held is None:
                self.phase = HumanPhase.IDLE
            elif now + _EPS >= self.phase_until:
                target = choose_block(p, obs, self.rng, self.positions, self.origin)
                if target is None:
                    self.phase_until = now + p.retry_interval
                else:
                    self.target = target
                    self._pursuit_comply = None
                    self.phase = HumanPhase.FIXATING
                    self.phase_until = now + p.gaze_lead

        elif self.phase is HumanPhase.FIXATING:
            if self._pursuit_blocked(obs):
                self._rescan(now)
            elif now + _EPS >= self.phase_until:
                self.phase = HumanPhase.REACHING
                self.phase_until = now + self._draw(p.reach_time, p.reach_jitter)

        elif self.phase is HumanPhase.REACHING:
            if self._pursuit_blocked(obs):
                self._rescan(now)
            elif now + _EPS >= self.phase_until:
                if self.target in obs.remaining:
                    block = self.target
                    events.append(Event(now, AgentId.HUMAN, EventKind.HUMAN_PICK, {"block": block}))
                    self.held = block
                    self.target = None
                    self.drop_zone = zone_for_label(self.labels[block])
                    self._pending_confirm = (now + p.confirm_delay, block)
                    # Highlight compliance exists only when highlights are
                    # visible; spotting the robot parked over a zone without
                    # AR is the p_zone_check channel.
                    self._carry_comply = (self.condition.ar_enabled
                                          and self.rng.random() < p.p_comply_red)
                    self._carry_check = (not self.condition.ar_enabled
                                         and self.rng.random() < p.p_zone_check)
                    self._carry_glance = (self._glance_active
                                          and self.rng.random() < p.p_zone_glance)
                    self.phase = HumanPhase.CARRYING
                else:
                    self._rescan(now)

        elif self.phase is HumanPhase.CARRYING:
            if self._safe_to_place(obs):
                self.phase = HumanPhase.PLACING
                self.phase_until = now + self._draw(p.place_time, p.place_jitter)

        elif self.phase is HumanPhase.PLACING:
            if now + _EPS >= self.phase_until:
                if self._carry_glance and self._zone_physically_busy(obs):
                    # Last look before letting go: the arm is in the zone, hold off.
                    self.phase = HumanPhase.CARRYING
                else:
                    events.append(Event(now, AgentId.HUMAN, EventKind.HUMAN_PLACE,
                                        {"block": self.held, "zone": self.drop_zone.value}))
                    self.held = None
                    self.drop_zone = None
                    self.phase = HumanPhase.SCANNING
                    self.phase_until = now + self._draw(p.scan_time, p.scan_jitter)

        elif self.phase is HumanPhase.IDLE:
            if obs.remaining:
                # Blocks reappeared (e-stop reset); get back to work.
                self.phase = HumanPhase.SCANNING
                self.phase_until = now + self._draw(p.rescan_time, p.rescan_jitter)

        return self._gaze(now, obs), events
