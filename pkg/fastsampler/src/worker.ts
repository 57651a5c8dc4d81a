/** Worker-thread entry: sample a range of record indices, return lines. */

import { parentPort, workerData } from "node:worker_threads";

import { recordLine } from "./format.js";
import { DEFAULT_CONFIG, RecordTag, SamplerConfig, SplitName, sampleTask } from "./sampler.js";

export type WorkerJob = {
  split: SplitName;
  seed: number;
  config?: Partial<SamplerConfig>;
  items: Array<{ tag: RecordTag; index: number }>;
};

export type WorkerResult = {
  lines: Array<{ tag: RecordTag; index: number; line: string }>;
};

export function runJob(job: WorkerJob): WorkerResult {
  const cfg = { ...DEFAULT_CONFIG, ...(job.config ?? {}) };
  const lines = job.items.map(({ tag, index }) => ({
    tag,
    index,
    line: recordLine(sampleTask(job.split, cfg, job.seed, index, tag)),
  }));
  return { lines };
}

if (parentPort) {
  const job = workerData as WorkerJob;
  parentPort.postMessage(runJob(job));
}
