import { describe, expect, it } from "vitest";

import { ALPHABET, FORMAT_NAME, headerLine, parseFile, recordLine } from "../src/format.js";
import { DEFAULT_CONFIG, sampleTask } from "../src/sampler.js";

describe("dataset format", () => {
  it("header carries the shared format constants", () => {
    const header = JSON.parse(headerLine());
    expect(header).toEqual({
      format: FORMAT_NAME,
      l_max: 20,
      v_io: 103,
      alphabet: ALPHABET,
    });
  });

  it("record lines parse back field-for-field", () => {
    const rec = sampleTask("length", DEFAULT_CONFIG, 0, 0, "train");
    const line = recordLine(rec);
    const obj = JSON.parse(line);
    expect(obj.split).toBe("train");
    expect(obj.descriptor).toBeNull();
    expect(obj.pairs).toHaveLength(DEFAULT_CONFIG.specSize + 1);
    for (const pair of obj.pairs) {
      expect(pair.x).toHaveLength(20);
      expect(pair.y).toHaveLength(20);
      for (const t of [...pair.x, ...pair.y]) {
        expect(t).toBeGreaterThanOrEqual(0);
        expect(t).toBeLessThan(103);
      }
    }
  });

  it("parseFile reports 1-based line numbers", () => {
    const recs = [0, 1, 2].map((i) => sampleTask("length", DEFAULT_CONFIG, 0, i, "train"));
    const text = headerLine() + "\n" + recs.map(recordLine).join("\n") + "\n";
    const parsed = parseFile(text);
    expect(parsed.records.map((r) => r.line)).toEqual([2, 3, 4]);
  });

  it("rejects unknown formats", () => {
    expect(() => parseFile('{"format":"other-v1"}\n')).toThrow(/unsupported format/);
  });
});
