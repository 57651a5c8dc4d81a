/**
 * Constraint-checked task sampling for the five compositional splits.
 *
 * Programs are chains over the most recent list value. Candidate tasks are
 * rejected on execution error, value-range violation, duplicate inputs, or
 * identity behavior on every sampled pair. Each record is fully determined by
 * (seed, split-tag, index), so output is independent of worker scheduling.
 */

import {
  Arg,
  ExecutionError,
  LAMBDA_BY_NAME,
  LAMBDA_KINDS,
  Lambda,
  OPERATIONS,
  OP_BY_NAME,
  Program,
  Statement,
  Value,
  execute,
  numInputs,
  opNames,
  programToText,
} from "./dsl.js";
import { Rng, makeRng, recordSeed } from "./rng.js";

export const SPLIT_NAMES = [
  "length",
  "compose-different-concepts",
  "switch-concept-order",
  "compose-new-operation",
  "add-operation-functionality",
] as const;
export type SplitName = (typeof SPLIT_NAMES)[number];

export const RECORD_TAGS = ["train", "test_id", "test_ood"] as const;
export type RecordTag = (typeof RECORD_TAGS)[number];

export const GROUP_A = [
  ...OPERATIONS.filter((o) => o.lambdaKind === null).map((o) => o.name),
  "Map",
];
export const GROUP_B = ["Filter", "Count", "ZipWith", "Scanl1"];

export const L_MAX = 20;
export const V_IO = 103;
export const IO_PAD = 0;
export const IO_SEP = 1;

export type SamplerConfig = {
  specSize: number;
  maxListLen: number;
  inputLenRange: [number, number];
  inputValueRange: [number, number];
  maxProgramTries: number;
  maxInputTries: number;
};

export const DEFAULT_CONFIG: SamplerConfig = {
  specSize: 3,
  maxListLen: 20,
  inputLenRange: [1, 8],
  inputValueRange: [-10, 10],
  maxProgramTries: 200,
  maxInputTries: 30,
};

export type Pair = { x: number[]; y: number[] };

export type Record = {
  split: RecordTag;
  program: string;
  descriptor: null;
  pairs: Pair[];
  task_id: string;
};

export class SamplerError extends Error {}

export function encodeValue(value: Value, lMax = L_MAX): number[] {
  const list = typeof value === "number" ? [value] : value;
  const toks = list.map((v) => v + 52);
  if (toks.length > lMax) throw new SamplerError("encoded value too long");
  while (toks.length < lMax) toks.push(IO_PAD);
  return toks;
}

export function encodeInputs(inputs: number[][], lMax = L_MAX): number[] {
  const toks: number[] = [];
  inputs.forEach((list, i) => {
    if (i > 0) toks.push(IO_SEP);
    for (const v of list) toks.push(v + 52);
  });
  if (toks.length > lMax) throw new SamplerError("encoded inputs too long");
  while (toks.length < lMax) toks.push(IO_PAD);
  return toks;
}

export function decodeInputs(x: number[]): number[][] {
  const toks = x.slice();
  while (toks.length && toks[toks.length - 1] === IO_PAD) toks.pop();
  const inputs: number[][] = [[]];
  for (const t of toks) {
    if (t === IO_SEP) inputs.push([]);
    else inputs[inputs.length - 1]!.push(t - 52);
  }
  return inputs;
}

function programLength(split: SplitName, isTrain: boolean, rng: Rng): number {
  if (split === "length") return isTrain ? rng.int(1, 5) : 5;
  if (split === "compose-new-operation" && !isTrain) return rng.int(2, 5);
  if (split === "compose-different-concepts") return isTrain ? rng.int(1, 5) : rng.int(2, 5);
  if (split === "switch-concept-order") return rng.int(2, 5);
  return rng.int(1, 5);
}

const ALL_OPS = OPERATIONS.map((o) => o.name);
const NON_SCAN = ALL_OPS.filter((n) => n !== "Scanl1");

function sampleOps(
  split: SplitName,
  isTrain: boolean,
  rng: Rng,
  isoBranch: boolean | null,
): string[] {
  const n = programLength(split, isTrain, rng);
  switch (split) {
    case "compose-new-operation": {
      if (isTrain) {
        if (isoBranch) return ["Scanl1"];
        return Array.from({ length: rng.int(1, 5) }, () => rng.choice(NON_SCAN));
      }
      const ops: string[] = Array.from({ length: n }, () => rng.choice(ALL_OPS));
      ops[rng.int(0, n)] = "Scanl1";
      const hasOther = ops.filter((o) => o !== "Scanl1").length > 0;
      if (!hasOther) ops[0] = rng.choice(NON_SCAN);
      return ops;
    }
    case "compose-different-concepts": {
      if (isTrain) {
        const pool = rng.next() < 0.5 ? GROUP_A : GROUP_B;
        return Array.from({ length: n }, () => rng.choice(pool));
      }
      const ops: string[] = Array.from({ length: n }, () =>
        rng.choice([...GROUP_A, ...GROUP_B]),
      );
      ops[0] = rng.choice(GROUP_A);
      ops[rng.int(1, n)] = rng.choice(GROUP_B);
      return ops;
    }
    case "switch-concept-order": {
      const m = Math.max(n, 2);
      const nA = rng.int(1, m);
      const aPart = Array.from({ length: nA }, () => rng.choice(GROUP_A));
      const bPart = Array.from({ length: m - nA }, () => rng.choice(GROUP_B));
      return isTrain ? [...aPart, ...bPart] : [...bPart, ...aPart];
    }
    case "add-operation-functionality":
    case "length":
    default: {
      const ops: string[] = Array.from({ length: n }, () => rng.choice(ALL_OPS));
      if (split === "add-operation-functionality" && !isTrain && !ops.includes("Scanl1")) {
        ops[rng.int(0, n)] = "Scanl1";
      }
      return ops;
    }
  }
}

function sampleLambda(
  opName: string,
  split: SplitName,
  isTrain: boolean,
  rng: Rng,
): Lambda | undefined {
  const spec = OP_BY_NAME.get(opName)!;
  if (!spec.lambdaKind) return undefined;
  let pool = LAMBDA_KINDS[spec.lambdaKind];
  if (opName === "Scanl1" && split === "add-operation-functionality") {
    const names = isTrain ? ["(-)", "(min)"] : ["(+)", "(*)", "(max)"];
    pool = names.map((n) => LAMBDA_BY_NAME.get(n)!);
  }
  return rng.choice(pool);
}

function buildProgram(
  split: SplitName,
  isTrain: boolean,
  rng: Rng,
  isoBranch: boolean | null,
): Program | null {
  const ops = sampleOps(split, isTrain, rng, isoBranch);
  const useTwoInputs = ops.includes("ZipWith") && rng.next() < 0.5;
  const statements: Statement[] = [{ variable: 0, op: "INPUT", args: [] }];
  if (useTwoInputs) statements.push({ variable: 1, op: "INPUT", args: [] });
  let nextVar = statements.length;
  const varTypes = new Map<number, "int" | "list">();
  for (let i = 0; i < nextVar; i++) varTypes.set(i, "list");
  let lastList = 0;
  const intVars: number[] = [];
  let zipUsedSecondInput = false;

  for (const opName of ops) {
    if (nextVar > 9) return null;
    const spec = OP_BY_NAME.get(opName)!;
    const lambda = sampleLambda(opName, split, isTrain, rng);
    const args: Arg[] = [];
    for (const want of spec.argTypes) {
      if (want === "int") {
        if (intVars.length > 0 && rng.next() < 0.5) {
          args.push({ kind: "var", index: rng.choice(intVars) });
        } else {
          const hi = opName === "Access" ? 7 : 8;
          args.push({ kind: "int", value: rng.int(0, hi + 1) });
        }
      } else {
        args.push({ kind: "var", index: lastList });
      }
    }
    if (opName === "ZipWith") {
      const candidates = [...varTypes.entries()]
        .filter(([v, t]) => t === "list" && v !== lastList)
        .map(([v]) => v);
      if (useTwoInputs && !zipUsedSecondInput) {
        args[1] = { kind: "var", index: 1 };
        zipUsedSecondInput = true;
      } else if (candidates.length > 0) {
        args[1] = { kind: "var", index: rng.choice(candidates) };
      }
    }
    statements.push({ variable: nextVar, op: opName, lambda, args });
    varTypes.set(nextVar, spec.returnType);
    if (spec.returnType === "list") lastList = nextVar;
    else intVars.push(nextVar);
    nextVar += 1;
  }
  if (useTwoInputs && !zipUsedSecondInput) return null;
  return { statements };
}

export function satisfiesSplit(p: Program, split: SplitName, isTrain: boolean): boolean {
  const ops = opNames(p);
  switch (split) {
    case "length":
      return isTrain ? ops.length >= 1 && ops.length <= 4 : ops.length === 5;
    case "compose-different-concepts": {
      const inA = ops.some((o) => GROUP_A.includes(o));
      const inB = ops.some((o) => GROUP_B.includes(o));
      return isTrain ? !(inA && inB) : inA && inB;
    }
    case "switch-concept-order": {
      const groups = ops.map((o) => (GROUP_A.includes(o) ? "A" : "B"));
      if (!groups.includes("A") || !groups.includes("B")) return false;
      const sortedAsc = [...groups].sort().join("");
      const joined = groups.join("");
      return isTrain
        ? joined === sortedAsc
        : joined === [...groups].sort().reverse().join("");
    }
    case "compose-new-operation":
      if (isTrain) {
        return (ops.length === 1 && ops[0] === "Scanl1") || !ops.includes("Scanl1");
      }
      return ops.includes("Scanl1") && ops.length >= 2;
    case "add-operation-functionality": {
      const scanLams = p.statements
        .filter((s) => s.op === "Scanl1" && s.lambda)
        .map((s) => s.lambda!.name);
      if (isTrain) return scanLams.every((n) => n === "(-)" || n === "(min)");
      return scanLams.some((n) => ["(+)", "(*)", "(max)"].includes(n));
    }
  }
}

function sampleInputs(p: Program, cfg: SamplerConfig, rng: Rng): number[][] {
  const [lo, hi] = cfg.inputLenRange;
  const [vlo, vhi] = cfg.inputValueRange;
  return Array.from({ length: numInputs(p) }, () => {
    const n = rng.int(lo, hi + 1);
    return Array.from({ length: n }, () => rng.int(vlo, vhi + 1));
  });
}

const TAG_INDEX: { [k in RecordTag]: number } = { train: 0, test_id: 1, test_ood: 2 };

export function sampleTask(
  split: SplitName,
  cfg: SamplerConfig,
  seed: number,
  index: number,
  tag: RecordTag,
): Record {
  if (!SPLIT_NAMES.includes(split)) {
    throw new SamplerError(`unknown split ${split}`);
  }
  const isTrain = tag !== "test_ood";
  const rng = makeRng(recordSeed(seed, TAG_INDEX[tag], index));
  const isoBranch =
    split === "compose-new-operation" && isTrain ? rng.next() < 0.25 : null;

  let programsTried = 0;
  let inputRejections = 0;
  let identityRejections = 0;

  for (let attempt = 0; attempt < cfg.maxProgramTries; attempt++) {
    programsTried += 1;
    const prog = buildProgram(split, isTrain, rng, isoBranch);
    if (!prog || !satisfiesSplit(prog, split, isTrain)) continue;

    inputLoop: for (let it = 0; it < cfg.maxInputTries; it++) {
      const pairs: Pair[] = [];
      const seen = new Set<string>();
      let identity = true;
      for (let k = 0; k < cfg.specSize + 1; k++) {
        const inputs = sampleInputs(prog, cfg, rng);
        const key = JSON.stringify(inputs);
        if (seen.has(key)) {
          inputRejections += 1;
          continue inputLoop;
        }
        seen.add(key);
        let out: Value;
        try {
          out = execute(prog, inputs, cfg.maxListLen);
        } catch (err) {
          if (err instanceof ExecutionError) {
            inputRejections += 1;
            continue inputLoop;
          }
          throw err;
        }
        const x = encodeInputs(inputs);
        const y = encodeValue(out);
        if (JSON.stringify(x) !== JSON.stringify(y)) identity = false;
        pairs.push({ x, y });
      }
      if (identity) {
        identityRejections += 1;
        continue;
      }
      return {
        split: tag,
        program: programToText(prog),
        descriptor: null,
        pairs,
        task_id: `fastsample-${split}-${tag}-${index}`,
      };
    }
  }
  throw new SamplerError(
    `retry budget exhausted for ${split}/${tag} index ${index}: ` +
      `${programsTried} programs, ${inputRejections} input rejections, ` +
      `${identityRejections} identity rejections`,
  );
}
