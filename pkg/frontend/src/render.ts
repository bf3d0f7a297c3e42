// DOM layer: builds the board once per session, then updates classes and
// text per state frame. Rendering is a pure function of ViewState plus the
// local hover; no workspace logic lives here.

import type { ViewState } from "./view_state.js";

const CM_TO_PX = 13;
const PAD = 24;

export interface RenderCallbacks {
  onBlockClick: (block: number) => void;
  onZoneClick: (zone: 1 | 2) => void;
  onConfirmClick: (block: number) => void;
  onHover: (block: number | null) => void;
}

export class Renderer {
  private root: HTMLElement;
  private cbs: RenderCallbacks;
  private blockEls = new Map<string, HTMLElement>();
  private zoneEls = new Map<number, HTMLElement>();
  private zoneSlots = new Map<number, HTMLElement>();
  private confirmBtns = new Map<string, HTMLButtonElement>();
  private builtFor: string | null = null;
  private els: Record<string, HTMLElement> = {};

  constructor(root: HTMLElement, cbs: RenderCallbacks) {
    this.root = root;
    this.cbs = cbs;
  }

  private build(state: ViewState): void {
    this.root.innerHTML = `
      <div id="statusbar">
        <span id="condition" class="badge"></span>
        <span id="robot-phase" class="badge"></span>
        <span id="timer" class="badge"></span>
        <span id="counters" class="badge"></span>
        <span id="connection" class="badge"></span>
      </div>
      <div id="board">
        <div id="start-area"><h3>start area</h3></div>
        <div id="zones"></div>
      </div>
      <div id="confirm-panel" class="hidden">
        <h3>confirm your pick</h3><div id="confirm-buttons"></div>
      </div>
      <div id="toasts"></div>
      <div id="estop-overlay" class="overlay hidden">
        <div class="overlay-card"><h2>EMERGENCY STOP</h2>
        <p>A rule was broken. Held blocks went back to start.</p>
        <p id="estop-count"></p></div>
      </div>
      <div id="done-overlay" class="overlay hidden">
        <div class="overlay-card"><h2>Task complete</h2><dl id="metrics"></dl></div>
      </div>
      <div id="reconnect-banner" class="hidden">connection lost, reconnecting…</div>
    `;
    for (const id of ["statusbar", "condition", "robot-phase", "timer", "counters",
      "connection", "start-area", "zones", "confirm-panel", "confirm-buttons",
      "toasts", "estop-overlay", "estop-count", "done-overlay", "metrics",
      "reconnect-banner"]) {
      this.els[id] = this.root.querySelector(`#${id}`) as HTMLElement;
    }

    const start = this.els["start-area"];
    start.addEventListener("pointerleave", () => this.cbs.onHover(null));
    const ids = Object.keys(state.labels).sort((a, b) => Number(a) - Number(b));
    for (const id of ids) {
      const el = document.createElement("div");
      el.className = "block";
      el.textContent = String(state.labels[id]);
      const [x, y] = state.positions[id] ?? [0, 0];
      el.style.left = `${PAD + x * CM_TO_PX}px`;
      el.style.top = `${PAD + 16 + y * CM_TO_PX}px`;
      el.dataset.block = id;
      el.addEventListener("click", () => this.cbs.onBlockClick(Number(id)));
      el.addEventListener("pointerenter", () => this.cbs.onHover(Number(id)));
      el.addEventListener("pointerleave", () => this.cbs.onHover(null));
      start.appendChild(el);
      this.blockEls.set(id, el);
    }

    for (const zone of [1, 2] as const) {
      const el = document.createElement("div");
      el.className = "zone";
      el.innerHTML = `<h3>zone ${zone}</h3><div class="zone-slots"></div>`;
      el.addEventListener("click", () => this.cbs.onZoneClick(zone));
      this.els["zones"].appendChild(el);
      this.zoneEls.set(zone, el);
      this.zoneSlots.set(zone, el.querySelector(".zone-slots") as HTMLElement);
    }

    for (const id of ids) {
      const btn = document.createElement("button");
      btn.textContent = `block ${id} (${state.labels[id]})`;
      btn.addEventListener("click", () => this.cbs.onConfirmClick(Number(id)));
      this.els["confirm-buttons"].appendChild(btn);
      this.confirmBtns.set(id, btn);
    }
  }

  update(state: ViewState, hovered: number | null): void {
    if (state.session && this.builtFor !== state.session) {
      this.builtFor = state.session;
      this.blockEls.clear();
      this.zoneEls.clear();
      this.confirmBtns.clear();
      this.build(state);
    }
    if (!this.builtFor) return;

    const hl = state.highlight;
    for (const [id, el] of this.blockEls) {
      const view = state.blocks[id];
      const classes = ["block"];
      if (!view || view.state !== "at_start") classes.push("gone");
      if (hl && hl.block !== null && String(hl.block) === id) classes.push(hl.color);
      if (state.intentMarker !== null && String(state.intentMarker) === id) classes.push("intent");
      if (hovered !== null && String(hovered) === id) classes.push("hovered");
      el.className = classes.join(" ");
    }

    for (const [zone, el] of this.zoneEls) {
      const classes = ["zone"];
      if (hl && hl.zone === zone) classes.push(hl.color);
      el.className = classes.join(" ");
      const slots = this.zoneSlots.get(zone)!;
      const placed = Object.entries(state.blocks)
        .filter(([, v]) => v.state === "placed" && v.zone === zone)
        .map(([id]) => id)
        .sort((a, b) => Number(a) - Number(b));
      const want = placed.map((id) => `<span class="placed-block">${state.labels[id] ?? "?"}</span>`).join("");
      if (slots.dataset.rendered !== want) {
        slots.innerHTML = want;
        slots.dataset.rendered = want;
      }
    }

    this.els["condition"].textContent = `condition: ${state.condition ?? "–"}`;
    this.els["robot-phase"].textContent = `robot: ${state.robotPhase.replace(/_/g, " ")}`;
    this.els["timer"].textContent = `t = ${state.t.toFixed(1)} s`;
    const c = state.counters;
    this.els["counters"].textContent =
      `errors: pick ${c.picking_errors} · place ${c.placing_errors} · e-stops ${c.estops}`;
    this.els["connection"].textContent = state.connection;
    this.els["connection"].dataset.status = state.connection;

    const held = state.held.human;
    const panel = this.els["confirm-panel"];
    panel.classList.toggle("hidden", !(state.confirmMenu && state.pendingConfirm !== null));
    for (const [id, btn] of this.confirmBtns) {
      btn.disabled = held === null || String(held) !== id;
    }

    this.els["toasts"].innerHTML = state.toasts
      .map((t) => `<div class="toast toast-${t.kind}">${t.text}</div>`)
      .join("");

    const estopActive = state.estopUntil !== null && state.frozenUntil !== null;
    this.els["estop-overlay"].classList.toggle("hidden", !estopActive);
    if (estopActive) {
      this.els["estop-count"].textContent = `e-stop #${state.counters.estops}; resuming shortly`;
    }

    this.els["done-overlay"].classList.toggle("hidden", state.metrics === null);
    if (state.metrics) {
      this.els["metrics"].innerHTML = Object.entries(state.metrics)
        .map(([k, v]) => `<dt>${k.replace(/_/g, " ")}</dt><dd>${typeof v === "number" ? +v.toFixed(3) : v}</dd>`)
        .join("");
    }

    this.els["reconnect-banner"].classList.toggle("hidden", state.connection !== "reconnecting");
  }
}
