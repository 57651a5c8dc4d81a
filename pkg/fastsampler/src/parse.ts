/** Minimal program-text parser used by self-validation to re-execute records
 * from their serialized form rather than from in-memory state. */

import {
  Arg,
  LAMBDA_BY_NAME,
  OP_BY_NAME,
  Program,
  Statement,
} from "./dsl.js";

export class ParseError extends Error {}

export function parseProgram(text: string): Program {
  const statements: Statement[] = [];
  const bound = new Set<number>();
  const lines = text.split("|").map((l) => l.trim());
  for (const [lineIdx, line] of lines.entries()) {
    const toks = line.split(/\s+/).filter(Boolean);
    if (toks.length < 3 || !toks[0]!.startsWith("x") || toks[1] !== "=") {
      throw new ParseError(`line ${lineIdx + 1}: expected 'xN = ...'`);
    }
    const variable = Number(toks[0]!.slice(1));
    if (!Number.isInteger(variable)) {
      throw new ParseError(`line ${lineIdx + 1}: bad variable ${toks[0]}`);
    }
    if (toks[2] === "INPUT") {
      statements.push({ variable, op: "INPUT", args: [] });
      bound.add(variable);
      continue;
    }
    const opName = toks[2]!;
    const spec = OP_BY_NAME.get(opName);
    if (!spec) throw new ParseError(`line ${lineIdx + 1}: unknown operation ${opName}`);
    let rest = toks.slice(3);
    let lambda = undefined;
    if (spec.lambdaKind) {
      lambda = LAMBDA_BY_NAME.get(rest[0] ?? "");
      if (!lambda) {
        throw new ParseError(`line ${lineIdx + 1}: ${opName} requires a lambda`);
      }
      rest = rest.slice(1);
    }
    const args: Arg[] = rest.map((tok) => {
      if (tok.startsWith("x")) {
        const idx = Number(tok.slice(1));
        if (!bound.has(idx)) {
          throw new ParseError(`line ${lineIdx + 1}: use of ${tok} before definition`);
        }
        return { kind: "var", index: idx };
      }
      const v = Number(tok);
      if (!Number.isInteger(v)) {
        throw new ParseError(`line ${lineIdx + 1}: bad argument ${tok}`);
      }
      return { kind: "int", value: v };
    });
    if (args.length !== spec.argTypes.length) {
      throw new ParseError(
        `line ${lineIdx + 1}: ${opName} expects ${spec.argTypes.length} args`,
      );
    }
    statements.push({ variable, op: opName, lambda, args });
    bound.add(variable);
  }
  if (statements.length === 0) throw new ParseError("empty program");
  return { statements };
}
