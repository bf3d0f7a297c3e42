"""Record a live session's server messages into a replay fixture.

Drives a scripted client through a short AR+gaze session that exercises
every message type (hello_ack, state deltas and snapshots, intent_ack,
violation, estop, reject, done) and saves the full server-to-client
stream for the web client's replay test.

Usage: python scripts/record_replay.py [out.json]
"""

import asyncio
import json
import sys
import time
from pathlib import Path

import websockets

from jaf.core_model import CONDITIONS, ScenarioConfig
from jaf.robot_agent import RobotConfig
from jaf.sim_engine import Scenario
from jaf.session_server import ServerConfig, _session_loop


async def record(out_path: Path) -> None:
    scenario = Scenario(
        workspace=ScenarioConfig(n_blocks=4),
        robot=RobotConfig(announce_duration=1.2, move_to_pick=1.0, grasp=0.3,
                          place=0.6, return_home=0.3),
        condition=CONDITIONS["both"],
        master_seed=12345,
        recovery_delay=1.0,
    )
    config = ServerConfig(trace_dir=Path("/tmp/replay-traces"), base_scenario=scenario)

    async def handler(ws):
        await _session_loop(ws, config)

    server = await websockets.serve(handler, "127.0.0.1", 0)
    port = server.sockets[0].getsockname()[1]
    recorded: list[dict] = []

    async def recv(ws, timeout=15.0):
        msg = json.loads(await asyncio.wait_for(ws.recv(), timeout))
        recorded.append(msg)
        return msg

    async def recv_until(ws, pred, timeout=20.0):
        deadline = time.monotonic() + timeout
        while True:
            msg = await recv(ws, max(0.1, deadline - time.monotonic()))
            if pred(msg):
                return msg

    try:
        async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
            await ws.send(json.dumps({"type": "hello", "condition": "both", "seed": 7}))
            await recv(ws)  # hello_ack

            # Provoke a reject for the fixture.
            await ws.send(json.dumps({"type": "pick", "block": 99}))
            await recv_until(ws, lambda m: m["type"] == "reject")

            # Hover the robot's announced target long enough to fire an intent.
            state = await recv_until(
                ws, lambda m: m["type"] == "state" and m.get("highlight"))
            target = state["highlight"]["block"]

            async def hover(block, seconds):
                for _ in range(int(seconds * 30)):
                    await ws.send(json.dumps({"type": "gaze", "block": block}))
                    await asyncio.sleep(1 / 30)

            hover_task = asyncio.create_task(hover(target, 1.2))
            await recv_until(ws, lambda m: m["type"] == "intent_ack")
            await hover_task

            # Grab whatever the robot commits to next: violation + estop.
            state = await recv_until(
                ws, lambda m: m["type"] == "state" and m["robot_phase"] == "moving_to_pick")
            red = state["highlight"]["block"]
            await ws.send(json.dumps({"type": "pick", "block": red}))
            await recv_until(ws, lambda m: m["type"] == "estop")

            # Let the robot finish the rest and collect done.
            await recv_until(ws, lambda m: m["type"] == "done", timeout=40.0)
    finally:
        server.close()
        await server.wait_closed()

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps({"messages": recorded}, indent=1), encoding="utf-8")
    kinds = {}
    for m in recorded:
        kinds[m["type"]] = kinds.get(m["type"], 0) + 1
    print(f"recorded {len(recorded)} messages to {out_path}: {kinds}")


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("frontend/tests/fixtures/replay.json")
    asyncio.run(record(out))
