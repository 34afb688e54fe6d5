import { describe, expect, it } from "vitest";

import {
  LDSI_PARAMS, decodeImage, decodeServerMessage, isSnapshot,
} from "../src/protocol.js";
import { makeSnapshot } from "./helpers.js";

describe("parameter metadata", () => {
  it("exposes all nine filter parameters", () => {
    expect(LDSI_PARAMS.map((p) => p.key)).toEqual([
      "ERCO", "ERCN", "ERNC", "TCE", "TNE", "MTR_ms", "DERP", "DERC", "DL",
    ]);
  });

  it("keeps the validated [0, 10] ranges on excitation/threshold/decay", () => {
    for (const meta of LDSI_PARAMS) {
      if (meta.key === "MTR_ms" || meta.key === "DL") continue;
      expect(meta.min).toBe(0);
      expect(meta.max).toBe(10);
    }
  });
});

describe("decodeServerMessage", () => {
  it("accepts a well-formed snapshot", () => {
    const snap = makeSnapshot();
    expect(decodeServerMessage(JSON.stringify(snap))).toEqual(snap);
  });

  it("rejects malformed JSON", () => {
    expect(decodeServerMessage("{not json")).toBeNull();
  });

  it("rejects snapshots with missing pieces", () => {
    const snap = makeSnapshot() as unknown as Record<string, unknown>;
    delete snap.metrics;
    expect(decodeServerMessage(JSON.stringify(snap))).toBeNull();
    expect(isSnapshot({ kind: "snapshot" })).toBe(false);
  });

  it("passes acks and errors through", () => {
    expect(decodeServerMessage('{"kind":"ack","seq":3}')).toEqual({
      kind: "ack", seq: 3,
    });
    expect(decodeServerMessage('{"kind":"error","seq":3,"message":"no"}'))
      .toMatchObject({ kind: "error" });
  });
});

describe("decodeImage", () => {
  it("round-trips base64 pixel data", () => {
    const bytes = Uint8Array.from([0, 64, 128, 255]);
    const data = Buffer.from(bytes).toString("base64");
    const img = { format: "raw8" as const, width: 2, height: 2, data };
    expect(Array.from(decodeImage(img))).toEqual([0, 64, 128, 255]);
  });
});
