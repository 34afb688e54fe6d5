// Canvas rendering of snapshots: raw and filtered event accumulation
// images side by side, estimate cross + TCP/truth markers, metrics text.

import { Snapshot, WireImage, decodeImage } from "./protocol.js";

const EVENT_TINT: [number, number, number] = [120, 220, 120];

export function drawWireImage(ctx: CanvasRenderingContext2D, img: WireImage): void {
  const pixels = decodeImage(img);
  const frame = ctx.createImageData(img.width, img.height);
  for (let i = 0; i < pixels.length; i++) {
    const v = pixels[i];
    frame.data[4 * i] = (v * EVENT_TINT[0]) >> 8;
    frame.data[4 * i + 1] = (v * EVENT_TINT[1]) >> 8;
    frame.data[4 * i + 2] = (v * EVENT_TINT[2]) >> 8;
    frame.data[4 * i + 3] = 255;
  }
  ctx.canvas.width = img.width;
  ctx.canvas.height = img.height;
  ctx.putImageData(frame, 0, 0);
}

export function drawEstimate(ctx: CanvasRenderingContext2D, snap: Snapshot): void {
  if (!snap.estimate) return;
  const { x, y } = snap.estimate;
  ctx.strokeStyle = "#ff5050";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x - 5, y);
  ctx.lineTo(x + 5, y);
  ctx.moveTo(x, y - 5);
  ctx.lineTo(x, y + 5);
  ctx.stroke();
}

/** Human metrics line; reduction shows an em dash until events arrive. */
export function formatMetrics(snap: Snapshot): string {
  const m = snap.metrics;
  const reduction = m.raw_count === 0 && m.reduction_ratio === 0
    ? "—"
    : `${(100 * m.reduction_ratio).toFixed(1)}%`;
  return [
    `mode ${snap.mode}`,
    `scene ${snap.scene}`,
    `events ${m.raw_count} → ${m.filtered_count}`,
    `reduction ${reduction}`,
    `TCP error ${m.tcp_error_mm.toFixed(2)} mm`,
  ].join("  ·  ");
}

export function formatPosition(snap: Snapshot): string {
  const tcp = snap.tcp_mm;
  const truth = snap.truth_mm;
  const est = snap.estimate
    ? `estimate (${snap.estimate.x}, ${snap.estimate.y}) px`
    : "estimate —";
  return `${est}  ·  TCP (${tcp.x.toFixed(1)}, ${tcp.y.toFixed(1)}) mm` +
    `  ·  ball (${truth.x.toFixed(1)}, ${truth.y.toFixed(1)}) mm`;
}

export interface Panels {
  raw: CanvasRenderingContext2D;
  filtered: CanvasRenderingContext2D;
  metrics: HTMLElement;
  position: HTMLElement;
}

export function renderSnapshot(panels: Panels, snap: Snapshot): void {
  drawWireImage(panels.raw, snap.raw_image);
  drawWireImage(panels.filtered, snap.filtered_image);
  drawEstimate(panels.filtered, snap);
  panels.metrics.textContent = formatMetrics(snap);
  panels.position.textContent = formatPosition(snap);
}
