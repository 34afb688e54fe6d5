// Entry point: connect a WebSocket to the live pipeline endpoint and
// wire the session, panels and controls together. The endpoint defaults
// to the serving host; override with ?ws=host:port.

import { buildControls } from "./controls.js";
import { Panels, renderSnapshot } from "./render.js";
import { SessionViewModel } from "./session.js";

const RECONNECT_MIN_MS = 500;
const RECONNECT_MAX_MS = 8000;

function endpoint(): string {
  const query = new URLSearchParams(window.location.search).get("ws");
  const target = query ?? `${window.location.hostname || "127.0.0.1"}:8765`;
  return `ws://${target}/`;
}

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function panels(): Panels {
  const ctx = (id: string) =>
    (byId(id) as HTMLCanvasElement).getContext("2d")!;
  return {
    raw: ctx("raw-view"),
    filtered: ctx("filtered-view"),
    metrics: byId("metrics"),
    position: byId("position"),
  };
}

function main(): void {
  const view = panels();
  const banner = byId("banner");
  const toasts = byId("toasts");

  const session = new SessionViewModel({
    onSnapshot: (snap) => renderSnapshot(view, snap),
    onStateChange: (state) => {
      banner.textContent = state === "connected" ? "" : `${state}…`;
      banner.className = state === "connected" ? "hidden" : "banner";
    },
    onToast: (message) => {
      const div = document.createElement("div");
      div.className = "toast";
      div.textContent = message;
      toasts.appendChild(div);
      setTimeout(() => div.remove(), 4000);
    },
  });

  buildControls(byId("controls"), session);

  let backoff = RECONNECT_MIN_MS;
  const connect = () => {
    const ws = new WebSocket(endpoint());
    ws.onopen = () => {
      backoff = RECONNECT_MIN_MS;
      session.attach({
        send: (text) => ws.send(text),
        close: () => ws.close(),
      });
    };
    ws.onmessage = (ev) => session.handleMessage(String(ev.data));
    ws.onclose = () => {
      session.detach();
      setTimeout(connect, backoff);
      backoff = Math.min(backoff * 2, RECONNECT_MAX_MS);
    };
    ws.onerror = () => ws.close();
  };
  connect();
}

main();
