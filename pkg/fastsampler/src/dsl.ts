/**
 * List-manipulation DSL value model and interpreter.
 *
 * Semantics mirror the reference implementation: integers confined to
 * [-50, 50], list lengths bounded, integer division truncating toward zero,
 * partial operations (Head/Last/Minimum/Maximum/Access) throw on empty or
 * out-of-bounds input.
 */

export const INT_MIN = -50;
export const INT_MAX = 50;
export const MAX_LIST_LEN = 20;

export type Value = number | number[];

export class ExecutionError extends Error {}

export type Lambda = {
  name: string;
  arity: 1 | 2;
  fn: (a: number, b?: number) => number | boolean;
};

const truncDiv = (a: number, b: number) => Math.trunc(a / b);

export const LAMBDAS: Lambda[] = [
  { name: "(+1)", arity: 1, fn: (v) => v + 1 },
  { name: "(-1)", arity: 1, fn: (v) => v - 1 },
  { name: "(*2)", arity: 1, fn: (v) => v * 2 },
  { name: "(/2)", arity: 1, fn: (v) => truncDiv(v, 2) },
  { name: "(*-1)", arity: 1, fn: (v) => -v },
  { name: "(**2)", arity: 1, fn: (v) => v * v },
  { name: "(*3)", arity: 1, fn: (v) => v * 3 },
  { name: "(/3)", arity: 1, fn: (v) => truncDiv(v, 3) },
  { name: "(*4)", arity: 1, fn: (v) => v * 4 },
  { name: "(/4)", arity: 1, fn: (v) => truncDiv(v, 4) },
  { name: "(>0)", arity: 1, fn: (v) => v > 0 },
  { name: "(<0)", arity: 1, fn: (v) => v < 0 },
  { name: "(even)", arity: 1, fn: (v) => v % 2 === 0 },
  { name: "(odd)", arity: 1, fn: (v) => v % 2 !== 0 },
  { name: "(+)", arity: 2, fn: (a, b) => a + b! },
  { name: "(-)", arity: 2, fn: (a, b) => a - b! },
  { name: "(*)", arity: 2, fn: (a, b) => a * b! },
  { name: "(min)", arity: 2, fn: (a, b) => Math.min(a, b!) },
  { name: "(max)", arity: 2, fn: (a, b) => Math.max(a, b!) },
];

export const LAMBDA_BY_NAME = new Map(LAMBDAS.map((l) => [l.name, l]));

export const INT_TO_INT = LAMBDAS.filter(
  (l) => l.arity === 1 && !["(>0)", "(<0)", "(even)", "(odd)"].includes(l.name),
);
export const INT_TO_BOOL = ["(>0)", "(<0)", "(even)", "(odd)"].map(
  (n) => LAMBDA_BY_NAME.get(n)!,
);
export const INT_INT_TO_INT = LAMBDAS.filter((l) => l.arity === 2);

export type ArgType = "int" | "list";

export type OpSpec = {
  name: string;
  argTypes: ArgType[];
  returnType: ArgType;
  lambdaKind: "int_int" | "int_bool" | "int_int_int" | null;
};

export const OPERATIONS: OpSpec[] = [
  { name: "Head", argTypes: ["list"], returnType: "int", lambdaKind: null },
  { name: "Last", argTypes: ["list"], returnType: "int", lambdaKind: null },
  { name: "Take", argTypes: ["int", "list"], returnType: "list", lambdaKind: null },
  { name: "Drop", argTypes: ["int", "list"], returnType: "list", lambdaKind: null },
  { name: "Access", argTypes: ["int", "list"], returnType: "int", lambdaKind: null },
  { name: "Minimum", argTypes: ["list"], returnType: "int", lambdaKind: null },
  { name: "Maximum", argTypes: ["list"], returnType: "int", lambdaKind: null },
  { name: "Reverse", argTypes: ["list"], returnType: "list", lambdaKind: null },
  { name: "Sort", argTypes: ["list"], returnType: "list", lambdaKind: null },
  { name: "Sum", argTypes: ["list"], returnType: "int", lambdaKind: null },
  { name: "Map", argTypes: ["list"], returnType: "list", lambdaKind: "int_int" },
  { name: "Filter", argTypes: ["list"], returnType: "list", lambdaKind: "int_bool" },
  { name: "Count", argTypes: ["list"], returnType: "int", lambdaKind: "int_bool" },
  { name: "ZipWith", argTypes: ["list", "list"], returnType: "list", lambdaKind: "int_int_int" },
  { name: "Scanl1", argTypes: ["list"], returnType: "list", lambdaKind: "int_int_int" },
];

export const OP_BY_NAME = new Map(OPERATIONS.map((o) => [o.name, o]));

export const LAMBDA_KINDS = {
  int_int: INT_TO_INT,
  int_bool: INT_TO_BOOL,
  int_int_int: INT_INT_TO_INT,
};

export type Arg =
  | { kind: "var"; index: number }
  | { kind: "int"; value: number };

export type Statement = {
  variable: number;
  op: string; // operation name or "INPUT"
  lambda?: Lambda;
  args: Arg[];
};

export type Program = { statements: Statement[] };

export function numInputs(p: Program): number {
  return p.statements.filter((s) => s.op === "INPUT").length;
}

export function opNames(p: Program): string[] {
  return p.statements.filter((s) => s.op !== "INPUT").map((s) => s.op);
}

export function programToText(p: Program): string {
  return p.statements
    .map((s) => {
      if (s.op === "INPUT") return `x${s.variable} = INPUT`;
      const parts = [`x${s.variable}`, "=", s.op];
      if (s.lambda) parts.push(s.lambda.name);
      for (const a of s.args) {
        parts.push(a.kind === "var" ? `x${a.index}` : String(a.value));
      }
      return parts.join(" ");
    })
    .join(" | ");
}

function checkValue(v: Value, maxListLen: number): Value {
  // `+ 0` collapses negative zero, which integer division can produce
  if (typeof v === "number") {
    if (!Number.isInteger(v) || v < INT_MIN || v > INT_MAX) {
      throw new ExecutionError(`integer ${v} outside [${INT_MIN}, ${INT_MAX}]`);
    }
    return v + 0;
  }
  if (v.length > maxListLen) {
    throw new ExecutionError(`list length ${v.length} exceeds ${maxListLen}`);
  }
  for (const e of v) {
    if (!Number.isInteger(e) || e < INT_MIN || e > INT_MAX) {
      throw new ExecutionError(`element ${e} outside [${INT_MIN}, ${INT_MAX}]`);
    }
  }
  return v.map((e) => e + 0);
}

function applyOp(name: string, lambda: Lambda | undefined, args: Value[]): Value {
  switch (name) {
    case "Head": {
      const l = args[0] as number[];
      if (l.length === 0) throw new ExecutionError("Head of empty list");
      return l[0]!;
    }
    case "Last": {
      const l = args[0] as number[];
      if (l.length === 0) throw new ExecutionError("Last of empty list");
      return l[l.length - 1]!;
    }
    case "Take": {
      const [n, l] = args as [number, number[]];
      return l.slice(0, Math.max(n, 0));
    }
    case "Drop": {
      const [n, l] = args as [number, number[]];
      return l.slice(Math.max(n, 0));
    }
    case "Access": {
      const [n, l] = args as [number, number[]];
      if (n < 0 || n >= l.length) {
        throw new ExecutionError(`Access index ${n} out of bounds`);
      }
      return l[n]!;
    }
    case "Minimum": {
      const l = args[0] as number[];
      if (l.length === 0) throw new ExecutionError("Minimum of empty list");
      return Math.min(...l);
    }
    case "Maximum": {
      const l = args[0] as number[];
      if (l.length === 0) throw new ExecutionError("Maximum of empty list");
      return Math.max(...l);
    }
    case "Reverse":
      return (args[0] as number[]).slice().reverse();
    case "Sort":
      return (args[0] as number[]).slice().sort((a, b) => a - b);
    case "Sum":
      return (args[0] as number[]).reduce((a, b) => a + b, 0);
    case "Map":
      return (args[0] as number[]).map((v) => lambda!.fn(v) as number);
    case "Filter":
      return (args[0] as number[]).filter((v) => lambda!.fn(v) as boolean);
    case "Count":
      return (args[0] as number[]).filter((v) => lambda!.fn(v) as boolean).length;
    case "ZipWith": {
      const [a, b] = args as [number[], number[]];
      const n = Math.min(a.length, b.length);
      const out: number[] = [];
      for (let i = 0; i < n; i++) out.push(lambda!.fn(a[i]!, b[i]!) as number);
      return out;
    }
    case "Scanl1": {
      const l = args[0] as number[];
      if (l.length === 0) return [];
      const out = [l[0]!];
      for (let i = 1; i < l.length; i++) {
        out.push(lambda!.fn(out[i - 1]!, l[i]!) as number);
      }
      return out;
    }
    default:
      throw new ExecutionError(`unknown operation ${name}`);
  }
}

/** Run a program; throws ExecutionError outside the value domain. */
export function execute(
  p: Program,
  inputs: Value[],
  maxListLen: number = MAX_LIST_LEN,
): Value {
  if (inputs.length !== numInputs(p)) {
    throw new ExecutionError(
      `program expects ${numInputs(p)} inputs, got ${inputs.length}`,
    );
  }
  const env = new Map<number, Value>();
  let nextInput = 0;
  let out: Value = 0;
  for (const st of p.statements) {
    let val: Value;
    if (st.op === "INPUT") {
      val = checkValue(inputs[nextInput++]!, maxListLen);
    } else {
      const resolved = st.args.map((a) =>
        a.kind === "var" ? env.get(a.index)! : a.value,
      );
      val = checkValue(applyOp(st.op, st.lambda, resolved), maxListLen);
    }
    env.set(st.variable, val);
    out = val;
  }
  return out;
}
