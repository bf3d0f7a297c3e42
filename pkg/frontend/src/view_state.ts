// Pure view-state reducer. Every visible fact derives from server messages
// plus the local hover position; there is no client-side rule evaluation.

import type { BlockStateView, Highlight, ServerMsg } from "./protocol.js";

export type Connection = "connecting" | "open" | "reconnecting" | "closed";

export interface Toast {
  kind: "violation" | "reject" | "info";
  text: string;
  at: number; // ms epoch, for expiry
}

export interface ViewState {
  connection: Connection;
  session: string | null;
  condition: string | null;
  confirmMenu: boolean;
  tickRate: number;
  dwellS: number;
  labels: Record<string, number>;
  positions: Record<string, [number, number]>;
  blocks: Record<string, BlockStateView>;
  highlight: Highlight | null;
  robotPhase: string;
  held: { robot: number | null; human: number | null };
  counters: { picking_errors: number; placing_errors: number; estops: number };
  frozenUntil: number | null;
  intentMarker: number | null;
  pendingConfirm: number | null;
  toasts: Toast[];
  estopUntil: number | null;
  metrics: Record<string, number> | null;
  t: number;
}

export function initialViewState(): ViewState {
  return {
    connection: "connecting",
    session: null,
    condition: null,
    confirmMenu: true,
    tickRate: 30,
    dwellS: 0.8,
    labels: {},
    positions: {},
    blocks: {},
    highlight: null,
    robotPhase: "idle",
    held: { robot: null, human: null },
    counters: { picking_errors: 0, placing_errors: 0, estops: 0 },
    frozenUntil: null,
    intentMarker: null,
    pendingConfirm: null,
    toasts: [],
    estopUntil: null,
    metrics: null,
    t: 0,
  };
}

const MAX_TOASTS = 5;

function pushToast(toasts: Toast[], toast: Toast): Toast[] {
  return [...toasts.slice(-(MAX_TOASTS - 1)), toast];
}

export function applyServerMsg(state: ViewState, msg: ServerMsg, nowMs = 0): ViewState {
  switch (msg.type) {
    case "hello_ack": {
      const blocks: Record<string, BlockStateView> = {};
      for (const id of Object.keys(msg.labels)) {
        blocks[id] = { state: "at_start", zone: null };
      }
      return {
        ...state,
        connection: "open",
        session: msg.session,
        condition: msg.condition,
        confirmMenu: msg.confirm_menu,
        tickRate: msg.tick_rate,
        dwellS: msg.dwell_s,
        labels: msg.labels,
        positions: msg.positions,
        blocks,
      };
    }
    case "state": {
      const blocks = msg.full ? { ...msg.blocks } : { ...state.blocks, ...msg.blocks };
      // Rendered highlights track the latest state message exactly: absent
      // field (non-AR session) means nothing is highlighted.
      const highlight = msg.highlight ?? null;
      let intentMarker = state.intentMarker;
      if (intentMarker !== null) {
        const marked = blocks[String(intentMarker)];
        if (marked && marked.state !== "at_start") intentMarker = null;
      }
      let pendingConfirm = state.pendingConfirm;
      if (msg.held.human === null) pendingConfirm = null;
      return {
        ...state,
        blocks,
        highlight,
        robotPhase: msg.robot_phase,
        held: msg.held,
        counters: msg.counters,
        frozenUntil: msg.frozen_until,
        estopUntil: msg.frozen_until === null ? null : state.estopUntil,
        intentMarker,
        pendingConfirm,
        t: msg.t,
      };
    }
    case "intent_ack":
      return { ...state, intentMarker: msg.block };
    case "violation":
      return {
        ...state,
        toasts: pushToast(state.toasts, {
          kind: "violation",
          text: `Violation: ${msg.kind.replace("_", " ")}`,
          at: nowMs,
        }),
      };
    case "estop":
      return {
        ...state,
        estopUntil: msg.until,
        toasts: pushToast(state.toasts, {
          kind: "info",
          text: "Emergency stop: blocks reset, hold on",
          at: nowMs,
        }),
      };
    case "reject":
      return {
        ...state,
        toasts: pushToast(state.toasts, { kind: "reject", text: msg.reason, at: nowMs }),
      };
    case "done":
      return { ...state, metrics: msg.metrics };
    default:
      return state;
  }
}

export function markPicked(state: ViewState, block: number): ViewState {
  // Menu-fidelity bookkeeping only: remember which block still needs its
  // confirmation button pressed. The workspace itself waits for the server.
  return state.confirmMenu ? { ...state, pendingConfirm: block } : state;
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  return { ...state, connection };
}

export function expireToasts(state: ViewState, nowMs: number, ttlMs = 4000): ViewState {
  const toasts = state.toasts.filter((t) => nowMs - t.at < ttlMs);
  return toasts.length === state.toasts.length ? state : { ...state, toasts };
}
