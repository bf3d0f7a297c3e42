"""Streaming dwell-based intent prediction from a gaze-target sample stream.

The predictor watches timestamped "which block is the user looking at"
samples and fires a pick-intent the moment continuous dwell on a single
block reaches the dwell threshold. Brief saccades (samples on another
block or on nothing) reset the dwell clock unless they fall within the
configured gap tolerance. A fired intent stays latched until a new dwell
completes elsewhere, the block stops being available, or the latch goes
stale because the user has not looked at the block for a while.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .core_model import BlockId


class StreamError(ValueError):
    """Raised when gaze samples arrive out of order."""


class GazeSample(NamedTuple):
    t: float
    target: Optional[BlockId]  # None when gaze is off all blocks


@dataclass(frozen=True)
class DwellConfig:
    d: float = 0.8                 # continuous-dwell threshold, seconds
    sample_period: float = 1.0 / 30.0
    gap_tolerance: int = 0         # off-target samples tolerated inside a dwell
    latch_expiry: float = 5.0      # latched intent dropped after this long unseen

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError(f"dwell threshold must be > 0, got {self.d}")
        if self.sample_period <= 0:
            raise ValueError(f"sample_period must be > 0, got {self.sample_period}")
        if self.gap_tolerance < 0:
            raise ValueError(f"gap_tolerance must be >= 0, got {self.gap_tolerance}")


class PredictedIntent(NamedTuple):
    block: BlockId
    t_fired: float


class DwellPredictor:
    """Single-writer streaming state; never share one instance across threads."""

    __slots__ = (
        "config", "_last_t", "_episode_block", "_episode_start", "_gap_run",
        "_fired_this_episode", "_latched", "_latch_last_seen",
    )

    def __init__(self, config: DwellConfig | None = None):
        self.config = config or DwellConfig()
        self.reset()

    def reset(self) -> None:
        """Clear any dwell in progress and any latched intent. Idempotent."""
        self._last_t: Optional[float] = None
        self._episode_block: Optional[BlockId] = None
        self._episode_start = 0.0
        self._gap_run = 0
        self._fired_this_episode = False
        self._latched: Optional[PredictedIntent] = None
        self._latch_last_seen = 0.0

    def ingest_sample(self, sample: GazeSample) -> Optional[PredictedIntent]:
        """Feed one sample; returns an intent exactly when a dwell completes.

        A dwell completes at the first sample where continuous gaze on one
        block has lasted >= d seconds; each contiguous dwell episode fires at
        most once. Samples must arrive with non-decreasing timestamps.
        """
        t, target = sample
        if self._last_t is not None and t < self._last_t - 1e-12:
            raise StreamError(f"gaze sample at t={t} older than previous t={self._last_t}")
        self._last_t = t

        if self._latched is not None and target == self._latched.block:
            self._latch_last_seen = t

        if target is not None and target == self._episode_block:
            self._gap_run = 0
        elif self._episode_block is None:
            if target is not None:
                self._begin_episode(target, t)
        else:
            # Interruption: another block or no block at all.
            self._gap_run += 1
            if self._gap_run > self.config.gap_tolerance:
                if target is not None:
                    self._begin_episode(target, t)
                else:
                    self._episode_block = None
            return None

        if (
            self._episode_block is not None
            and not self._fired_this_episode
            and t - self._episode_start + 1e-9 >= self.config.d
        ):
            self._fired_this_episode = True
            intent = PredictedIntent(block=self._episode_block, t_fired=t)
            self._latched = intent
            self._latch_last_seen = t
            return intent
        return None

    def _begin_episode(self, block: BlockId, t: float) -> None:
        self._episode_block = block
        self._episode_start = t
        self._gap_run = 0
        self._fired_this_episode = False

    def current_intent(
        self, now: float, available: Optional[Iterable[BlockId]] = None
    ) -> Optional[PredictedIntent]:
        """The latched intent, if it is still live.

        A latch dies when the block is no longer in `available` (when given),
        or when latch_expiry has elapsed since the block was last gazed at.
        Death is permanent: a dropped latch never comes back by itself.
        """
        intent = self._latched
        if intent is None:
            return None
        if now - self._latch_last_seen > self.config.latch_expiry + 1e-9:
            self._latched = None
            return None
        if available is not None and intent.block not in available:
            self._latched = None
            return None
        return intent
