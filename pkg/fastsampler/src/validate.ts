/**
 * Self-validation: re-parse every record's program text and re-execute it on
 * the decoded inputs with this component's own interpreter; audit the split
 * constraint implied by the record's task id. Any mismatch is a defect in the
 * sampler and must fail hard.
 */

import { readFileSync } from "node:fs";

import { ExecutionError } from "./dsl.js";
import { execute } from "./dsl.js";
import { parseProgram } from "./parse.js";
import { parseFile } from "./format.js";
import {
  RECORD_TAGS,
  SPLIT_NAMES,
  SplitName,
  decodeInputs,
  encodeValue,
  satisfiesSplit,
} from "./sampler.js";

export type ValidationReport = {
  checked: number;
  mismatches: number;
  mismatchLines: number[];
  constraintViolations: number;
  constraintLines: number[];
  unaudited: number;
};

function splitFromTaskId(taskId: string | undefined): SplitName | null {
  if (!taskId) return null;
  for (const name of SPLIT_NAMES) {
    if (taskId.includes(`-${name}-`)) return name;
  }
  return null;
}

export function validateFile(path: string): ValidationReport {
  const parsed = parseFile(readFileSync(path, "utf-8"));
  const report: ValidationReport = {
    checked: 0,
    mismatches: 0,
    mismatchLines: [],
    constraintViolations: 0,
    constraintLines: [],
    unaudited: 0,
  };
  for (const rec of parsed.records) {
    report.checked += 1;
    let ok = true;
    try {
      if (!rec.program) throw new Error("record has no program text");
      const prog = parseProgram(rec.program);
      for (const pair of rec.pairs) {
        const inputs = decodeInputs(pair.x);
        const out = execute(prog, inputs);
        const encoded = encodeValue(out, pair.y.length);
        if (JSON.stringify(encoded) !== JSON.stringify(pair.y)) {
          ok = false;
          break;
        }
      }
      const split = splitFromTaskId(rec.task_id);
      if (split && RECORD_TAGS.includes(rec.split as never)) {
        const isTrain = rec.split !== "test_ood";
        if (!satisfiesSplit(prog, split, isTrain)) {
          report.constraintViolations += 1;
          report.constraintLines.push(rec.line);
        }
      } else {
        report.unaudited += 1;
      }
    } catch (err) {
      if (err instanceof ExecutionError || err instanceof Error) ok = false;
      else throw err;
    }
    if (!ok) {
      report.mismatches += 1;
      report.mismatchLines.push(rec.line);
    }
  }
  return report;
}
