// Parameter panel: one slider per filter parameter, tracker controls,
// mode switch and scene selector, all driving the session view model.

import {
  LDSI_PARAMS, LdsiWireParams, MODES, SCENE_PRESETS, TrackerWireParams,
} from "./protocol.js";
import { SessionViewModel } from "./session.js";

const TRACKER_CONTROLS: { key: keyof TrackerWireParams; label: string; min: number; max: number }[] = [
  { key: "window", label: "tracker window (events)", min: 4, max: 100 },
  { key: "vicinity_radius", label: "vicinity radius (px)", min: 0, max: 10 },
];

function row(parent: HTMLElement, label: string): HTMLElement {
  const div = document.createElement("div");
  div.className = "control-row";
  const span = document.createElement("label");
  span.textContent = label;
  div.appendChild(span);
  parent.appendChild(div);
  return div;
}

export function buildControls(root: HTMLElement, session: SessionViewModel): void {
  const sliders = new Map<string, { input: HTMLInputElement; value: HTMLElement }>();

  for (const meta of LDSI_PARAMS) {
    const r = row(root, meta.label);
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(meta.min);
    input.max = String(meta.max);
    input.step = String(meta.step);
    input.dataset.param = meta.key;
    const value = document.createElement("span");
    value.className = "value";
    input.addEventListener("input", () => {
      value.textContent = input.value;
      session.editParam(meta.key, Number(input.value));
    });
    input.addEventListener("change", () => session.flushPending());
    r.appendChild(input);
    r.appendChild(value);
    sliders.set(meta.key, { input, value });
  }

  for (const meta of TRACKER_CONTROLS) {
    const r = row(root, meta.label);
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(meta.min);
    input.max = String(meta.max);
    input.step = "1";
    input.dataset.param = meta.key;
    const value = document.createElement("span");
    value.className = "value";
    input.addEventListener("input", () => {
      value.textContent = input.value;
      session.editTracker(meta.key, Number(input.value));
    });
    input.addEventListener("change", () => session.flushPending());
    r.appendChild(input);
    r.appendChild(value);
    sliders.set(meta.key, { input, value });
  }

  const modeRow = row(root, "mode");
  for (const mode of MODES) {
    const btn = document.createElement("button");
    btn.textContent = mode;
    btn.dataset.mode = mode;
    btn.addEventListener("click", () => session.setMode(mode));
    modeRow.appendChild(btn);
  }

  const sceneRow = row(root, "scene");
  const select = document.createElement("select");
  for (const preset of SCENE_PRESETS) {
    const opt = document.createElement("option");
    opt.value = preset;
    opt.textContent = preset;
    select.appendChild(opt);
  }
  select.addEventListener("change", () => session.setScene(select.value));
  sceneRow.appendChild(select);

  const errorLine = document.createElement("div");
  errorLine.className = "param-error";
  root.appendChild(errorLine);

  // reflect acked state; pending (unacked) edits keep the slider position
  const sync = () => {
    const applied = session.applied;
    if (!applied) return;
    for (const meta of LDSI_PARAMS) {
      const s = sliders.get(meta.key)!;
      const pendingValue = session.pending[meta.key];
      const shown = pendingValue ?? applied.ldsi[meta.key as keyof LdsiWireParams];
      if (document.activeElement !== s.input) {
        s.input.value = String(shown);
        s.value.textContent = String(shown);
      }
    }
    for (const meta of TRACKER_CONTROLS) {
      const s = sliders.get(meta.key)!;
      const shown = session.pendingTracker[meta.key] ?? applied.tracker[meta.key];
      if (document.activeElement !== s.input) {
        s.input.value = String(shown);
        s.value.textContent = String(shown);
      }
    }
    errorLine.textContent = session.lastError ?? "";
  };
  const prev = sessionEvents(session).onParamsChange;
  sessionEvents(session).onParamsChange = () => {
    prev?.();
    sync();
  };
  sync();
}

// the view model exposes its event sinks as a plain object
function sessionEvents(session: SessionViewModel): {
  onParamsChange?: () => void;
} {
  return (session as unknown as { events: { onParamsChange?: () => void } }).events;
}
