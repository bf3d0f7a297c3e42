import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { ServerMsg, StateMsg } from "../src/protocol.js";
import {
  applyServerMsg,
  expireToasts,
  initialViewState,
  markPicked,
  setConnection,
  type ViewState,
} from "../src/view_state.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(readFileSync(join(here, "fixtures", "replay.json"), "utf-8")) as {
  messages: ServerMsg[];
};

function replay(messages: ServerMsg[]): ViewState {
  let state = initialViewState();
  for (const msg of messages) state = applyServerMsg(state, msg, 0);
  return state;
}

describe("recorded session replay", () => {
  it("fixture covers the whole message vocabulary", () => {
    const kinds = new Set(fixture.messages.map((m) => m.type));
    for (const k of ["hello_ack", "state", "intent_ack", "violation", "estop", "reject", "done"]) {
      expect(kinds, `missing ${k} in fixture`).toContain(k);
    }
  });

  it("rendered highlights track every state message exactly", () => {
    let state = initialViewState();
    for (const msg of fixture.messages) {
      state = applyServerMsg(state, msg, 0);
      if (msg.type === "state") {
        const expected = msg.highlight ?? null;
        expect(state.highlight).toEqual(expected);
      }
    }
  });

  it("block states mirror the latest server snapshot", () => {
    let state = initialViewState();
    const lastKnown: Record<string, string> = {};
    for (const msg of fixture.messages) {
      state = applyServerMsg(state, msg, 0);
      if (msg.type === "state") {
        for (const [id, view] of Object.entries(msg.blocks)) {
          lastKnown[id] = view.state;
        }
        for (const [id, wanted] of Object.entries(lastKnown)) {
          expect(state.blocks[id]?.state).toBe(wanted);
        }
      }
    }
  });

  it("ends with done metrics and a completed workspace", () => {
    const state = replay(fixture.messages);
    expect(state.metrics).not.toBeNull();
    expect(state.metrics!.picking_errors).toBe(1); // the scripted grab of a red block
    const placed = Object.values(state.blocks).filter((b) => b.state === "placed");
    expect(placed.length).toBe(Object.keys(state.labels).length);
  });

  it("violation and estop produce toasts and the reset overlay", () => {
    let state = initialViewState();
    let sawOverlay = false;
    for (const msg of fixture.messages) {
      state = applyServerMsg(state, msg, 0);
      if (msg.type === "estop") {
        expect(state.estopUntil).toBe(msg.until);
        expect(state.toasts.length).toBeGreaterThan(0);
      }
      if (state.estopUntil !== null && state.frozenUntil !== null) sawOverlay = true;
    }
    expect(sawOverlay).toBe(true);
    // Overlay clears once the server stops reporting the freeze.
    expect(state.frozenUntil).toBeNull();
  });

  it("intent ack sets the marker; marker clears when the block leaves the table", () => {
    let state = initialViewState();
    let marked: number | null = null;
    let markerSeen = false;
    for (const msg of fixture.messages) {
      state = applyServerMsg(state, msg, 0);
      if (msg.type === "intent_ack") {
        marked = msg.block;
        expect(state.intentMarker).toBe(marked);
        markerSeen = true;
      }
    }
    expect(markerSeen).toBe(true);
    // By session end every block is placed, so no marker may survive.
    expect(state.intentMarker).toBeNull();
  });

  it("reject messages surface as toasts", () => {
    let state = initialViewState();
    for (const msg of fixture.messages) {
      const before = state.toasts.length;
      state = applyServerMsg(state, msg, 0);
      if (msg.type === "reject") {
        expect(state.toasts.length).toBeGreaterThan(before - 1);
        expect(state.toasts.at(-1)!.kind).toBe("reject");
      }
    }
  });
});

describe("reducer unit behavior", () => {
  const helloAck: ServerMsg = {
    type: "hello_ack",
    session: "s1",
    condition: "none",
    n_blocks: 2,
    labels: { "0": 1, "1": 2 },
    positions: { "0": [0, 0], "1": [6, 0] },
    confirm_menu: true,
    tick_rate: 30,
    dwell_s: 0.8,
  };

  it("non-AR state messages never produce a highlight", () => {
    let state = applyServerMsg(initialViewState(), helloAck, 0);
    const stateMsg: StateMsg = {
      type: "state",
      t: 1.0,
      full: true,
      blocks: { "0": { state: "at_start", zone: null }, "1": { state: "at_start", zone: null } },
      robot_phase: "announce",
      held: { robot: null, human: null },
      counters: { picking_errors: 0, placing_errors: 0, estops: 0 },
      frozen_until: null,
      // no highlight field at all: the server omits it without AR
    };
    state = applyServerMsg(state, stateMsg, 0);
    expect(state.highlight).toBeNull();
  });

  it("deltas merge over the previous snapshot", () => {
    let state = applyServerMsg(initialViewState(), helloAck, 0);
    const full: StateMsg = {
      type: "state", t: 1, full: true,
      blocks: { "0": { state: "at_start", zone: null }, "1": { state: "at_start", zone: null } },
      robot_phase: "idle", held: { robot: null, human: null },
      counters: { picking_errors: 0, placing_errors: 0, estops: 0 }, frozen_until: null,
    };
    const delta: StateMsg = {
      ...full, t: 2, full: false,
      blocks: { "1": { state: "held_human", zone: null } },
      held: { robot: null, human: 1 },
    };
    state = applyServerMsg(state, full, 0);
    state = applyServerMsg(state, delta, 0);
    expect(state.blocks["0"].state).toBe("at_start");
    expect(state.blocks["1"].state).toBe("held_human");
  });

  it("markPicked tracks the pending confirmation only in menu mode", () => {
    let state = applyServerMsg(initialViewState(), helloAck, 0);
    state = markPicked(state, 1);
    expect(state.pendingConfirm).toBe(1);
    const noMenu = { ...state, confirmMenu: false, pendingConfirm: null };
    expect(markPicked(noMenu, 1).pendingConfirm).toBeNull();
  });

  it("connection status and toast expiry", () => {
    let state = setConnection(initialViewState(), "reconnecting");
    expect(state.connection).toBe("reconnecting");
    state = applyServerMsg(state, { type: "reject", reason: "nope" }, 1000);
    expect(state.toasts.length).toBe(1);
    state = expireToasts(state, 6000);
    expect(state.toasts.length).toBe(0);
  });
});
