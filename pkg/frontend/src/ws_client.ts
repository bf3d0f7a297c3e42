// Thin WebSocket wrapper: JSON in/out, automatic reconnect with a visible
// "reconnecting" phase so the UI can show a banner within a second or two.

import type { ClientMsg, ServerMsg } from "./protocol.js";
import { parseServerMsg } from "./protocol.js";

export interface WsCallbacks {
  onMessage: (msg: ServerMsg) => void;
  onStatus: (status: "connecting" | "open" | "reconnecting" | "closed") => void;
}

export class WsClient {
  private ws: WebSocket | null = null;
  private closedByUs = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private hello: ClientMsg,
    private cbs: WsCallbacks,
    private retryMs = 1000,
  ) {}

  connect(): void {
    this.cbs.onStatus(this.ws === null ? "connecting" : "reconnecting");
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.cbs.onStatus("open");
      ws.send(JSON.stringify(this.hello));
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMsg(String(ev.data));
      if (msg) this.cbs.onMessage(msg);
    };
    ws.onclose = () => {
      if (this.closedByUs) {
        this.cbs.onStatus("closed");
        return;
      }
      this.cbs.onStatus("reconnecting");
      this.retryTimer = setTimeout(() => this.connect(), this.retryMs);
    };
    ws.onerror = () => {
      try {
        ws.close();
      } catch {
        /* already closing */
      }
    };
  }

  send(msg: ClientMsg): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closedByUs = true;
    if (this.retryTimer) clearTimeout(this.retryTimer);
    this.ws?.close();
  }
}
