// Wiring: socket -> reducer -> renderer, plus outbound clicks and hover-gaze.

import { GazeEmitter } from "./gaze.js";
import { Renderer } from "./render.js";
import {
  applyServerMsg,
  expireToasts,
  initialViewState,
  markPicked,
  setConnection,
  type ViewState,
} from "./view_state.js";
import { WsClient } from "./ws_client.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(location.search).get(name) ?? fallback;
}

function main(): void {
  const root = document.getElementById("app")!;
  const serverUrl = param("server", `ws://${location.hostname || "127.0.0.1"}:8090`);
  const condition = param("condition", "both") as "both" | "ar" | "gaze" | "none";
  const seed = Number(param("seed", String(Math.floor(Math.random() * 1e6))));

  let state: ViewState = initialViewState();
  const gaze = new GazeEmitter();
  let gazeStarted = false;

  const render = () => renderer.update(state, gaze.hovered);

  const client = new WsClient(
    serverUrl,
    { type: "hello", condition, seed },
    {
      onMessage: (msg) => {
        state = applyServerMsg(state, msg, Date.now());
        if (msg.type === "hello_ack" && !gazeStarted) {
          gazeStarted = true;
          gaze.start(client, state.tickRate);
        }
        if (msg.type === "done") gaze.stop();
        render();
      },
      onStatus: (status) => {
        state = setConnection(state, status);
        render();
      },
    },
  );

  const renderer = new Renderer(root, {
    onBlockClick: (block) => {
      if (state.held.human === null) {
        client.send({ type: "pick", block });
        state = markPicked(state, block);
        render();
      }
    },
    onZoneClick: (zone) => {
      const held = state.held.human;
      if (held !== null) client.send({ type: "place", block: held, zone });
    },
    onConfirmClick: (block) => {
      client.send({ type: "confirm_pick", block });
      if (state.pendingConfirm === block) {
        state = { ...state, pendingConfirm: null };
        render();
      }
    },
    onHover: (block) => {
      gaze.hovered = block;
      render();
    },
  });

  setInterval(() => {
    const next = expireToasts(state, Date.now());
    if (next !== state) {
      state = next;
      render();
    }
  }, 500);

  client.connect();
  render();
}

main();
