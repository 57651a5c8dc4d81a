import { describe, expect, it } from "vitest";

import {
  ExecutionError,
  LAMBDA_BY_NAME,
  LAMBDAS,
  OPERATIONS,
  Program,
  execute,
  programToText,
} from "../src/dsl.js";
import { parseProgram } from "../src/parse.js";

const prog = (text: string): Program => parseProgram(text);

describe("interpreter semantics", () => {
  it("runs a staged pipeline", () => {
    // Sort -> Map(+1) -> Sum
    const p = prog("x0 = INPUT | x1 = Sort x0 | x2 = Map (+1) x1 | x3 = Sum x2");
    expect(execute(p, [[3, 1, 4, 1, 5]])).toBe(19);
  });

  it("truncates division toward zero", () => {
    const p = prog("x0 = INPUT | x1 = Map (/2) x0");
    expect(execute(p, [[-3, 3, -1, 5]])).toEqual([-1, 1, 0, 2]);
  });

  it("scanl1 folds with running value", () => {
    const p = prog("x0 = INPUT | x1 = Scanl1 (+) x0");
    expect(execute(p, [[1, 2, 3, 4]])).toEqual([1, 3, 6, 10]);
    expect(execute(p, [[]])).toEqual([]);
  });

  it("partial operations throw on empty lists", () => {
    for (const op of ["Head", "Last", "Minimum", "Maximum"]) {
      const p = prog(`x0 = INPUT | x1 = ${op} x0`);
      expect(() => execute(p, [[]])).toThrow(ExecutionError);
    }
  });

  it("access is bounds-checked", () => {
    const p = prog("x0 = INPUT | x1 = Access 5 x0");
    expect(() => execute(p, [[1, 2]])).toThrow(ExecutionError);
    expect(execute(p, [[0, 1, 2, 3, 4, 5, 6]])).toBe(5);
  });

  it("rejects values outside the token range", () => {
    const p = prog("x0 = INPUT | x1 = Map (*4) x0");
    expect(() => execute(p, [[20]])).toThrow(ExecutionError);
  });

  it("take and drop are total via clamping", () => {
    const take = prog("x0 = INPUT | x1 = Take 3 x0");
    expect(execute(take, [[5, 4]])).toEqual([5, 4]);
    const drop = prog("x0 = INPUT | x1 = Drop 8 x0");
    expect(execute(drop, [[1, 2]])).toEqual([]);
  });

  it("zipwith truncates to the shorter list", () => {
    const p = prog("x0 = INPUT | x1 = Reverse x0 | x2 = ZipWith (+) x0 x1");
    expect(execute(p, [[1, 2, 3]])).toEqual([4, 4, 4]);
  });

  it("has the documented operation and lambda counts", () => {
    expect(OPERATIONS.length).toBe(15);
    expect(LAMBDAS.length).toBe(19);
    expect(LAMBDA_BY_NAME.get("(min)")!.fn(3, 1)).toBe(1);
  });

  it("program text round-trips through the parser", () => {
    const text = "x0 = INPUT | x1 = Sort x0 | x2 = Map (*2) x1";
    expect(programToText(parseProgram(text))).toBe(text);
  });
});
