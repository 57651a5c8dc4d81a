#!/usr/bin/env node
/**
 * nli-fastsample: sample interpreter-validated DSL tasks into the shared
 * JSONL dataset format, in parallel, and self-validate the result.
 *
 *   nli-fastsample --split length --count 10000 --seed 0 --out tasks.jsonl \
 *                  --workers 4 [--sorted] [--test-count N]
 *   nli-fastsample validate --file tasks.jsonl
 *
 * Exit codes: 0 ok, 2 validation failure.
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { Worker } from "node:worker_threads";

import { headerLine } from "./format.js";
import {
  RECORD_TAGS,
  RecordTag,
  SPLIT_NAMES,
  SplitName,
} from "./sampler.js";
import { validateFile } from "./validate.js";
import { WorkerJob, WorkerResult, runJob } from "./worker.js";

const TAG_ORDER: { [k in RecordTag]: number } = { train: 0, test_id: 1, test_ood: 2 };

function buildItems(count: number, testCount: number) {
  const items: Array<{ tag: RecordTag; index: number }> = [];
  for (let i = 0; i < count; i++) items.push({ tag: "train", index: i });
  for (let i = 0; i < testCount; i++) items.push({ tag: "test_id", index: i });
  for (let i = 0; i < testCount; i++) items.push({ tag: "test_ood", index: i });
  return items;
}

async function runWorkers(
  split: SplitName,
  seed: number,
  specSize: number,
  items: Array<{ tag: RecordTag; index: number }>,
  workers: number,
): Promise<WorkerResult["lines"]> {
  const jobFor = (slice: typeof items): WorkerJob => ({
    split,
    seed,
    config: { specSize },
    items: slice,
  });
  if (workers <= 1) {
    return runJob(jobFor(items)).lines;
  }
  const chunk = Math.ceil(items.length / workers);
  const slices = [];
  for (let i = 0; i < items.length; i += chunk) slices.push(items.slice(i, i + chunk));
  const results = await Promise.all(
    slices.map(
      (slice) =>
        new Promise<WorkerResult>((resolve, reject) => {
          const w = new Worker(new URL("./worker.js", import.meta.url), {
            workerData: jobFor(slice),
          });
          w.once("message", (msg: WorkerResult) => resolve(msg));
          w.once("error", reject);
          w.once("exit", (code) => {
            if (code !== 0) reject(new Error(`worker exited with ${code}`));
          });
        }),
    ),
  );
  return results.flatMap((r) => r.lines);
}

async function main(): Promise<number> {
  const argv = process.argv.slice(2);
  if (argv[0] === "validate") {
    const { values } = parseArgs({
      args: argv.slice(1),
      options: { file: { type: "string" } },
      allowPositionals: true,
    });
    const file = values.file ?? argv[1];
    if (!file) {
      console.error("validate requires --file PATH");
      return 2;
    }
    const report = validateFile(file);
    console.log(JSON.stringify(report));
    return report.mismatches === 0 && report.constraintViolations === 0 ? 0 : 2;
  }

  const { values } = parseArgs({
    args: argv,
    options: {
      split: { type: "string" },
      count: { type: "string" },
      "test-count": { type: "string" },
      seed: { type: "string", default: "0" },
      out: { type: "string" },
      workers: { type: "string", default: "1" },
      sorted: { type: "boolean", default: false },
      "spec-size": { type: "string", default: "3" },
    },
  });
  const split = values.split as SplitName | undefined;
  if (!split || !SPLIT_NAMES.includes(split)) {
    console.error(`--split must be one of: ${SPLIT_NAMES.join(", ")}`);
    return 2;
  }
  const count = Number(values.count ?? 0);
  if (!Number.isInteger(count) || count < 1) {
    console.error("--count must be a positive integer");
    return 2;
  }
  const testCount = values["test-count"]
    ? Number(values["test-count"])
    : Math.max(Math.floor(count / 5), 1);
  const seed = Number(values.seed);
  const workers = Math.max(Number(values.workers), 1);
  const specSize = Number(values["spec-size"]);
  const out = values.out;
  if (!out) {
    console.error("--out PATH is required");
    return 2;
  }

  const items = buildItems(count, testCount);
  const started = Date.now();
  const lines = await runWorkers(split, seed, specSize, items, workers);
  if (values.sorted) {
    lines.sort((a, b) => TAG_ORDER[a.tag] - TAG_ORDER[b.tag] || a.index - b.index);
  }
  writeFileSync(out, headerLine() + "\n" + lines.map((l) => l.line).join("\n") + "\n");
  const elapsed = (Date.now() - started) / 1000;

  // never ship a file this component cannot itself re-validate
  const report = validateFile(out);
  const ok = report.mismatches === 0 && report.constraintViolations === 0;
  console.log(
    JSON.stringify({
      records: lines.length,
      seconds: elapsed,
      recordsPerSecond: Math.round(lines.length / Math.max(elapsed, 1e-9)),
      validation: report,
    }),
  );
  if (!ok) {
    console.error("emitted file failed self-validation; refusing to succeed");
    return 2;
  }
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(2);
  },
);
