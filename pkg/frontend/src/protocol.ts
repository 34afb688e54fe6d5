// Wire protocol shared with the live pipeline endpoint.
//
// Messages are JSON objects with a `kind` field. Over WebSocket each
// message is one text frame; the raw TCP variant uses a 4-byte
// big-endian length prefix instead (only the conformance script uses
// that). Filter parameters travel in their wire spelling (ERCO..DL,
// MTR_ms); millisecond-to-microsecond conversion happens server-side.

export interface LdsiWireParams {
  ERCO: number;
  ERCN: number;
  ERNC: number;
  TCE: number;
  TNE: number;
  MTR_ms: number;
  DERP: number;
  DERC: number;
  DL: number;
}

export interface TrackerWireParams {
  window: number;
  vicinity_radius: number;
}

export interface WireImage {
  format: "raw8";
  width: number;
  height: number;
  data: string; // base64 row-major uint8
}

export interface Snapshot {
  kind: "snapshot";
  t_us: number;
  mode: "event" | "frame";
  scene: string;
  params: { ldsi: LdsiWireParams; tracker: TrackerWireParams };
  estimate: { x: number; y: number; t_us: number } | null;
  tcp_mm: { x: number; y: number };
  truth_mm: { x: number; y: number };
  metrics: {
    raw_count: number;
    filtered_count: number;
    reduction_ratio: number;
    tcp_error_mm: number;
  };
  raw_image: WireImage;
  filtered_image: WireImage;
}

export interface Ack {
  kind: "ack";
  seq: number;
  applied?: unknown;
}

export interface ErrorReply {
  kind: "error";
  seq: number | null;
  message: string;
}

export type ServerMessage = Snapshot | Ack | ErrorReply;

export interface ParamMeta {
  key: keyof LdsiWireParams;
  label: string;
  min: number;
  max: number;
  step: number;
}

// The nine tunable filter parameters with their validated ranges.
export const LDSI_PARAMS: ParamMeta[] = [
  { key: "ERCO", label: "core excitation / event", min: 0, max: 10, step: 0.5 },
  { key: "ERCN", label: "same-unit excitation / firing", min: 0, max: 10, step: 0.5 },
  { key: "ERNC", label: "neighbour excitation / firing", min: 0, max: 10, step: 0.5 },
  { key: "TCE", label: "core firing threshold", min: 0, max: 10, step: 0.5 },
  { key: "TNE", label: "output firing threshold", min: 0, max: 10, step: 0.5 },
  { key: "MTR_ms", label: "decay interval (ms)", min: 1, max: 500, step: 1 },
  { key: "DERP", label: "core decay / interval", min: 0, max: 10, step: 0.5 },
  { key: "DERC", label: "output decay / interval", min: 0, max: 10, step: 0.5 },
  { key: "DL", label: "fan-out radius (px)", min: 0, max: 3, step: 1 },
];

export const SCENE_PRESETS = ["circle", "diagonal", "zigzag"] as const;
export const MODES = ["event", "frame"] as const;

export function isSnapshot(msg: unknown): msg is Snapshot {
  const m = msg as Partial<Snapshot> | null;
  return (
    !!m &&
    m.kind === "snapshot" &&
    typeof m.t_us === "number" &&
    (m.mode === "event" || m.mode === "frame") &&
    !!m.params &&
    typeof m.params.ldsi === "object" &&
    !!m.metrics &&
    typeof m.metrics.raw_count === "number" &&
    isWireImage(m.raw_image) &&
    isWireImage(m.filtered_image)
  );
}

function isWireImage(img: unknown): img is WireImage {
  const i = img as Partial<WireImage> | null;
  return (
    !!i &&
    i.format === "raw8" &&
    typeof i.width === "number" &&
    typeof i.height === "number" &&
    typeof i.data === "string"
  );
}

export function decodeServerMessage(text: string): ServerMessage | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch {
    return null;
  }
  const kind = (parsed as { kind?: string }).kind;
  if (kind === "ack" || kind === "error") return parsed as Ack | ErrorReply;
  if (isSnapshot(parsed)) return parsed;
  return null;
}

export function decodeImage(img: WireImage): Uint8Array {
  const bin = typeof atob === "function"
    ? atob(img.data)
    : Buffer.from(img.data, "base64").toString("binary");
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}
