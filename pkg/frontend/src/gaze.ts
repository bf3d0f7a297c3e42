// Hover-as-gaze: the pointer stands in for eye tracking with identical
// dwell semantics server-side. Whatever block is under the pointer is
// reported at the session tick rate; leaving all blocks reports null.

import type { WsClient } from "./ws_client.js";

export class GazeEmitter {
  hovered: number | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  start(client: WsClient, tickRate: number): void {
    this.stop();
    this.timer = setInterval(() => {
      client.send({ type: "gaze", block: this.hovered });
    }, 1000 / tickRate);
  }

  stop(): void {
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
  }
}
