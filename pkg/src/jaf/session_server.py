"""Realtime session server: a live human drives the protocol over WebSockets.

One WebSocket connection is one isolated session. The client opens with a
hello message naming the condition and seed, then exchanges JSON messages
(gaze / pick / place / confirm_pick) while the server runs the robot's
commitment machine and the dwell predictor on a wall-clock tick,
broadcasting state at the tick rate. The server clock is the only
timestamp authority; every trace event carries server session time.

State broadcasts are deltas (changed blocks only) with a full snapshot
every two seconds. Highlight fields appear only in AR-enabled sessions.
Each finished or torn-down session persists its trace as the same JSONL
schema the simulator writes, so metrics can be recomputed offline.
"""

from __future__ import annotations

import asyncio
import http
import json
import logging
import signal
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .core_model import (
    AgentId,
    AtStart,
    Condition,
    Event,
    EventKind,
    HeldBy,
    ScenarioConfig,
    apply_event,
    init_workspace,
)
from .gaze_intent import DwellPredictor, GazeSample
from .robot_agent import RobotAgent, RobotPhase
from .sim_engine import Scenario, Trace, derive_rng, detect_violation, finalize_metrics

logger = logging.getLogger("jaf.server")

FULL_SNAPSHOT_EVERY_S = 2.0


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8090
    tick_rate: float = 30.0
    trace_dir: Path = Path("traces")
    base_scenario: Scenario = field(default_factory=Scenario)
    static_dir: Optional[Path] = None


def make_session_scenario(base: Scenario, hello: dict) -> Scenario:
    """Apply the hello message's condition/seed/overrides to the base scenario."""
    scenario = replace(
        base,
        condition=Condition.from_name(hello.get("condition", base.condition.name)),
        master_seed=int(hello.get("seed", base.master_seed)),
    )
    ov = hello.get("scenario") or {}
    if "n_blocks" in ov:
        scenario = replace(scenario, workspace=ScenarioConfig(n_blocks=int(ov["n_blocks"])))
    if "robot" in ov:
        scenario = replace(scenario, robot=replace(scenario.robot, **ov["robot"]))
    if "dwell" in ov:
        scenario = replace(scenario, dwell=replace(scenario.dwell, **ov["dwell"]))
    if "recovery_delay" in ov:
        scenario = replace(scenario, recovery_delay=float(ov["recovery_delay"]))
    if "confirm_menu" in ov:
        scenario = replace(scenario, confirm_menu=bool(ov["confirm_menu"]))
    return scenario


def _block_view(rec) -> dict:
    state = rec.state
    if isinstance(state, AtStart):
        return {"state": "at_start", "zone": None}
    if isinstance(state, HeldBy):
        return {"state": f"held_{state.agent.value}", "zone": None}
    return {"state": "placed", "zone": state.zone.value}


class Session:
    """Single-session protocol logic, independent of the transport/event loop.

    All methods take the current server session time; the asyncio layer (or
    a test driver) supplies it, so the logic itself is clock-agnostic.
    """

    def __init__(self, scenario: Scenario, session_id: Optional[str] = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.scenario = scenario
        self.condition = scenario.condition
        ids, labels, positions = scenario.workspace.resolved()
        self.block_ids = ids
        self.labels = dict(zip(ids, labels))
        self.positions = dict(zip(ids, positions))
        self.workspace = init_workspace(scenario.workspace)
        self.robot = RobotAgent(scenario.robot, ids, rng=derive_rng(scenario.master_seed, "robot"))
        self.predictor = DwellPredictor(scenario.dwell)
        self.events: list[Event] = []
        self.frozen_until = -1.0
        self.done = False
        self.metrics = None
        self.counters = {"picking_errors": 0, "placing_errors": 0, "estops": 0}
        self.gaze_msgs_ignored = 0
        self._picks = 0
        self._matched = 0
        self._dirty: set[int] = set()
        self._last_full = -1e9
        self._last_t = 0.0

    # -- helpers -----------------------------------------------------------

    def _at_start(self) -> set[int]:
        return {b for b, rec in self.workspace.blocks.items() if isinstance(rec.state, AtStart)}

    def _record(self, ev: Event) -> None:
        self.workspace = apply_event(self.workspace, ev)
        self.events.append(ev)
        if ev.kind in (EventKind.HUMAN_PICK, EventKind.HUMAN_PLACE, EventKind.PICK_DONE,
                       EventKind.PLACE_DONE, EventKind.RESET):
            if "block" in ev.payload:
                self._dirty.add(ev.payload["block"])
            if ev.kind is EventKind.RESET:
                self._dirty.update(self.block_ids)

    def _latched_block(self, now: float) -> Optional[int]:
        if not self.condition.gaze_enabled:
            return None
        latched = self.predictor.current_intent(now, self._at_start())
        return latched.block if latched is not None else None

    def hello_ack(self) -> dict:
        return {
            "type": "hello_ack",
            "session": self.id,
            "condition": self.condition.name,
            "n_blocks": len(self.block_ids),
            "labels": {str(b): self.labels[b].value for b in self.block_ids},
            "positions": {str(b): list(self.positions[b]) for b in self.block_ids},
            "confirm_menu": self.scenario.confirm_menu,
            "tick_rate": 1.0 / self.scenario.dwell.sample_period,
            "dwell_s": self.scenario.dwell.d,
        }

    def state_message(self, now: float, full: bool) -> dict:
        if full:
            blocks = {str(b): _block_view(self.workspace.blocks[b]) for b in self.block_ids}
            self._last_full = now
        else:
            blocks = {str(b): _block_view(self.workspace.blocks[b]) for b in sorted(self._dirty)}
        self._dirty.clear()
        msg = {
            "type": "state",
            "t": round(now, 4),
            "full": full,
            "blocks": blocks,
            "robot_phase": self.robot.phase.value,
            "held": {
                "robot": self.robot.holding,
                "human": self.workspace.held_by(AgentId.HUMAN),
            },
            "counters": dict(self.counters),
            "frozen_until": round(self.frozen_until, 4) if now < self.frozen_until else None,
        }
        if self.condition.ar_enabled:
            msg["highlight"] = self.robot.highlight()
        return msg

    # -- violation / estop ---------------------------------------------------

    def _estop(self, now: float, kind: str, detail: dict) -> list[dict]:
        self._record(Event(now, None, EventKind.VIOLATION, {"kind": kind, **detail}))
        self._record(Event(now, None, EventKind.ESTOP, {}))
        self._record(Event(now, None, EventKind.RESET, {}))
        self.robot.estop_reset(now)
        self.robot.sync_known_remaining(self._at_start())
        self.predictor.reset()
        self.frozen_until = now + self.scenario.recovery_delay
        if kind == "picking_error":
            self.counters["picking_errors"] += 1
        elif kind == "placing_error":
            self.counters["placing_errors"] += 1
        self.counters["estops"] += 1
        return [
            {"type": "violation", "kind": kind, "t": round(now, 4), **detail},
            {"type": "estop", "t": round(now, 4), "until": round(self.frozen_until, 4)},
        ]

    # -- client messages -------------------------------------------------------

    def handle_message(self, now: float, msg: dict) -> list[dict]:
        """Process one client message, returning direct replies. State
        changes also show up in the next broadcast."""
        now = max(now, self._last_t)
        self._last_t = now
        if not isinstance(msg, dict) or "type" not in msg:
            return [{"type": "reject", "reason": "message must be an object with a type"}]
        kind = msg["type"]
        if kind == "gaze":
            return self._on_gaze(now, msg)
        if kind == "pick":
            return self._on_pick(now, msg)
        if kind == "place":
            return self._on_place(now, msg)
        if kind == "confirm_pick":
            return self._on_confirm(now, msg)
        if kind == "bye":
            self.done = True
            return []
        return [{"type": "reject", "reason": f"unknown message type {kind!r}"}]

    def _on_gaze(self, now: float, msg: dict) -> list[dict]:
        block = msg.get("block")
        if block is not None and block not in self.labels:
            return [{"type": "reject", "reason": f"unknown block {block!r}"}]
        if not self.condition.gaze_enabled or now < self.frozen_until:
            self.gaze_msgs_ignored += 1
            return []
        intent = self.predictor.ingest_sample(GazeSample(now, block))
        if intent is None:
            return []
        self._record(Event(now, None, EventKind.GAZE_INTENT, {"block": intent.block}))
        for ev in self.robot.on_user_intent(intent, now):
            self._record(ev)
        return [{"type": "intent_ack", "block": intent.block, "t": round(now, 4)}]

    def _on_pick(self, now: float, msg: dict) -> list[dict]:
        if now < self.frozen_until:
            return [{"type": "reject", "reason": "e-stop recovery in progress"}]
        block = msg.get("block")
        if block not in self.labels:
            return [{"type": "reject", "reason": f"unknown block {block!r}"}]
        if not isinstance(self.workspace.blocks[block].state, AtStart):
            return [{"type": "reject", "reason": f"block {block} is not at start"}]
        if self.workspace.held_by(AgentId.HUMAN) is not None:
            return [{"type": "reject", "reason": "already holding a block"}]
        predicted = self._latched_block(now)
        ev = Event(now, AgentId.HUMAN, EventKind.HUMAN_PICK, {"block": block, "predicted": predicted})
        violation = detect_violation(self.workspace, self.robot.phase, self.robot.target, ev)
        self._record(ev)
        self._picks += 1
        if predicted == block:
            self._matched += 1
        if not self.scenario.confirm_menu:
            self.robot.note_block_taken(block)
        if violation is not None:
            return self._estop(now, violation.kind.value, {"block": block})
        return []

    def _on_place(self, now: float, msg: dict) -> list[dict]:
        if now < self.frozen_until:
            return [{"type": "reject", "reason": "e-stop recovery in progress"}]
        block = msg.get("block")
        zone = msg.get("zone")
        if block not in self.labels:
            return [{"type": "reject", "reason": f"unknown block {block!r}"}]
        if zone not in (1, 2):
            return [{"type": "reject", "reason": f"zone must be 1 or 2, got {zone!r}"}]
        held = self.workspace.blocks[block].state
        if not (isinstance(held, HeldBy) and held.agent is AgentId.HUMAN):
            return [{"type": "reject", "reason": f"block {block} is not in hand"}]
        ev = Event(now, AgentId.HUMAN, EventKind.HUMAN_PLACE, {"block": block, "zone": zone})
        violation = detect_violation(self.workspace, self.robot.phase, self.robot.target, ev)
        self._record(ev)
        if violation is not None:
            return self._estop(now, violation.kind.value, {"zone": zone})
        return []

    def _on_confirm(self, now: float, msg: dict) -> list[dict]:
        block = msg.get("block")
        if block not in self.labels:
            return [{"type": "reject", "reason": f"unknown block {block!r}"}]
        held = self.workspace.blocks[block].state
        if not (isinstance(held, HeldBy) and held.agent is AgentId.HUMAN):
            # Confirming a block you do not hold is a menu misuse.
            return [{"type": "reject", "reason": f"cannot confirm block {block}: not in hand"}]
        self._record(Event(now, AgentId.HUMAN, EventKind.CONFIRM_PICK, {"block": block}))
        if self.scenario.confirm_menu:
            self.robot.note_block_taken(block)
        return []

    # -- tick ---------------------------------------------------------------

    def tick(self, now: float) -> list[dict]:
        """One server tick: advance the robot, then broadcast state."""
        now = max(now, self._last_t)
        self._last_t = now
        out: list[dict] = []
        if self.done:
            return out
        if now + 1e-9 >= self.frozen_until:
            predicted = self._latched_block(now)
            for ev in self.robot.step(now, self.workspace, predicted=predicted):
                self._record(ev)
        if self.workspace.all_placed() and self.robot.phase is RobotPhase.IDLE:
            self._record(Event(now, None, EventKind.TASK_COMPLETE, {}))
            trace = self.build_trace()
            self.metrics = finalize_metrics(trace)
            self.done = True
            out.append(self.state_message(now, full=True))
            out.append({"type": "done", "metrics": self.metrics.to_json()})
            return out
        full = (now - self._last_full) >= FULL_SNAPSHOT_EVERY_S
        out.append(self.state_message(now, full=full))
        return out

    # -- persistence -----------------------------------------------------------

    def build_trace(self) -> Trace:
        trace = Trace(events=list(self.events), scenario_digest=self.scenario.digest())
        trace.finalize(self.workspace)
        return trace

    def persist(self, trace_dir: Path) -> Path:
        trace_dir.mkdir(parents=True, exist_ok=True)
        path = trace_dir / f"session-{self.id}.jsonl"
        self.build_trace().to_jsonl(path, extra_meta={
            "session": self.id,
            "condition": self.condition.name,
            "seed": self.scenario.master_seed,
            "complete": self.done and self.metrics is not None,
        })
        return path


# ---------------------------------------------------------------------------
# Transport (asyncio + websockets)
# ---------------------------------------------------------------------------


async def _session_loop(websocket, config: ServerConfig) -> None:
    epoch = time.monotonic()

    def now() -> float:
        return time.monotonic() - epoch

    try:
        raw = await websocket.recv()
        hello = json.loads(raw)
        if not isinstance(hello, dict) or hello.get("type") != "hello":
            await websocket.send(json.dumps({"type": "reject", "reason": "expected hello"}))
            return
        scenario = make_session_scenario(config.base_scenario, hello)
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as e:
        try:
            await websocket.send(json.dumps({"type": "reject", "reason": f"bad hello: {e}"}))
        finally:
            return

    session = Session(scenario)
    logger.info("session %s opened (condition=%s seed=%s)",
                session.id, scenario.condition.name, scenario.master_seed)
    await websocket.send(json.dumps(session.hello_ack()))
    await websocket.send(json.dumps(session.state_message(now(), full=True)))

    queue: asyncio.Queue = asyncio.Queue()

    async def reader():
        try:
            async for raw_msg in websocket:
                await queue.put(raw_msg)
        except Exception:
            pass
        finally:
            await queue.put(None)

    reader_task = asyncio.create_task(reader())
    tick_period = 1.0 / config.tick_rate
    client_gone = False
    try:
        while not session.done and not client_gone:
            while not queue.empty():
                raw_msg = queue.get_nowait()
                if raw_msg is None:
                    client_gone = True
                    break
                try:
                    msg = json.loads(raw_msg)
                except json.JSONDecodeError:
                    msg = None
                replies = session.handle_message(now(), msg if msg is not None else {})
                for reply in replies:
                    await websocket.send(json.dumps(reply))
            if client_gone:
                break
            for out in session.tick(now()):
                await websocket.send(json.dumps(out))
            await asyncio.sleep(tick_period)
    except Exception:
        logger.exception("session %s crashed", session.id)
    finally:
        reader_task.cancel()
        try:
            path = session.persist(config.trace_dir)
            logger.info("session %s persisted to %s (complete=%s)", session.id, path, session.done)
        except Exception:
            logger.exception("failed to persist session %s", session.id)
        try:
            await websocket.close()
        except Exception:
            pass


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


def _static_responder(static_dir: Path):
    from websockets.datastructures import Headers
    from websockets.http11 import Response

    root = static_dir.resolve()

    def process_request(connection, request):
        if "Upgrade" in request.headers:
            return None  # let the WebSocket handshake proceed
        rel = request.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not target.is_relative_to(root) or not target.is_file():
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_bytes()
        headers = Headers([
            ("Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream")),
            ("Content-Length", str(len(body))),
        ])
        return Response(200, "OK", headers, body)

    return process_request


async def _serve(config: ServerConfig, stop: asyncio.Future) -> None:
    import websockets

    async def handler(websocket):
        await _session_loop(websocket, config)

    kwargs = {}
    if config.static_dir is not None:
        kwargs["process_request"] = _static_responder(config.static_dir)
    async with websockets.serve(handler, config.host, config.port, **kwargs):
        logger.info("listening on ws://%s:%d", config.host, config.port)
        await stop


def serve_forever(config: ServerConfig) -> None:
    """Run until SIGINT/SIGTERM; in-flight sessions flush partial traces."""
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")

    async def main():
        loop = asyncio.get_running_loop()
        stop = loop.create_future()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, lambda: stop.done() or stop.set_result(None))
        await _serve(config, stop)

    asyncio.run(main())
