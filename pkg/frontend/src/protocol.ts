// Wire protocol types mirroring docs/protocol.md. The server is the sole
// authority; the client renders what it is told and never evaluates rules.

export type Zone = 1 | 2;

export interface HelloMsg {
  type: "hello";
  condition: "both" | "ar" | "gaze" | "none";
  seed: number;
  scenario?: Record<string, unknown>;
}

export interface GazeMsg {
  type: "gaze";
  block: number | null;
}

export interface PickMsg {
  type: "pick";
  block: number;
}

export interface PlaceMsg {
  type: "place";
  block: number;
  zone: Zone;
}

export interface ConfirmPickMsg {
  type: "confirm_pick";
  block: number;
}

export type ClientMsg = HelloMsg | GazeMsg | PickMsg | PlaceMsg | ConfirmPickMsg;

export interface Highlight {
  color: "yellow" | "red";
  block: number | null;
  zone: Zone;
}

export interface BlockStateView {
  state: "at_start" | "held_robot" | "held_human" | "placed";
  zone: Zone | null;
}

export interface HelloAckMsg {
  type: "hello_ack";
  session: string;
  condition: string;
  n_blocks: number;
  labels: Record<string, number>;
  positions: Record<string, [number, number]>;
  confirm_menu: boolean;
  tick_rate: number;
  dwell_s: number;
}

export interface StateMsg {
  type: "state";
  t: number;
  full: boolean;
  blocks: Record<string, BlockStateView>;
  robot_phase: string;
  held: { robot: number | null; human: number | null };
  counters: { picking_errors: number; placing_errors: number; estops: number };
  frozen_until: number | null;
  highlight?: Highlight | null; // absent entirely in non-AR sessions
}

export interface IntentAckMsg {
  type: "intent_ack";
  block: number;
  t: number;
}

export interface ViolationMsg {
  type: "violation";
  kind: string;
  t: number;
}

export interface EstopMsg {
  type: "estop";
  t: number;
  until: number;
}

export interface RejectMsg {
  type: "reject";
  reason: string;
}

export interface DoneMsg {
  type: "done";
  metrics: Record<string, number>;
}

export type ServerMsg =
  | HelloAckMsg
  | StateMsg
  | IntentAckMsg
  | ViolationMsg
  | EstopMsg
  | RejectMsg
  | DoneMsg;

export function parseServerMsg(raw: string): ServerMsg | null {
  try {
    const msg = JSON.parse(raw);
    if (msg && typeof msg === "object" && typeof msg.type === "string") {
      return msg as ServerMsg;
    }
  } catch {
    // fall through
  }
  return null;
}
