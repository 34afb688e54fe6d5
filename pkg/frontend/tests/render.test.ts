import { describe, expect, it } from "vitest";

import { formatMetrics, formatPosition } from "../src/render.js";
import { makeSnapshot } from "./helpers.js";

describe("metrics formatting", () => {
  it("summarizes counts, reduction and error", () => {
    const text = formatMetrics(makeSnapshot());
    expect(text).toContain("3000 → 500");
    expect(text).toContain("83.0%");
    expect(text).toContain("4.20 mm");
  });

  it("shows an em dash before any events arrive", () => {
    const snap = makeSnapshot({
      metrics: { raw_count: 0, filtered_count: 0, reduction_ratio: 0, tcp_error_mm: 0 },
    });
    expect(formatMetrics(snap)).toContain("reduction —");
  });
});

describe("position formatting", () => {
  it("includes estimate, TCP and ball truth", () => {
    const text = formatPosition(makeSnapshot());
    expect(text).toContain("estimate (64, 64) px");
    expect(text).toContain("TCP (150.0, 264.0) mm");
  });

  it("handles a missing estimate", () => {
    expect(formatPosition(makeSnapshot({ estimate: null }))).toContain("estimate —");
  });
});
