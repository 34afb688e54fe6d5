import { LdsiWireParams, Snapshot } from "../src/protocol.js";

export const DEFAULT_LDSI: LdsiWireParams = {
  ERCO: 5, ERCN: 5, ERNC: 2, TCE: 8, TNE: 8, MTR_ms: 20, DERP: 10, DERC: 10, DL: 1,
};

export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  const image = (w: number, h: number) => ({
    format: "raw8" as const,
    width: w,
    height: h,
    data: Buffer.alloc(w * h).toString("base64"),
  });
  return {
    kind: "snapshot",
    t_us: 20000,
    mode: "event",
    scene: "circle",
    params: { ldsi: { ...DEFAULT_LDSI }, tracker: { window: 20, vicinity_radius: 3 } },
    estimate: { x: 64, y: 64, t_us: 19000 },
    tcp_mm: { x: 150.0, y: 264.0 },
    truth_mm: { x: 150.0, y: 264.0 },
    metrics: {
      raw_count: 3000,
      filtered_count: 500,
      reduction_ratio: 0.83,
      tcp_error_mm: 4.2,
    },
    raw_image: image(128, 128),
    filtered_image: image(128, 128),
    ...overrides,
  };
}

export class MockChannel {
  sent: Record<string, unknown>[] = [];
  closed = false;

  send(text: string): void {
    this.sent.push(JSON.parse(text));
  }

  close(): void {
    this.closed = true;
  }

  last(): Record<string, unknown> {
    return this.sent[this.sent.length - 1];
  }

  ofKind(kind: string): Record<string, unknown>[] {
    return this.sent.filter((m) => m.kind === kind);
  }
}
