/** JSONL emission in the exact shape the reference loader reads. */

import { L_MAX, Record, V_IO } from "./sampler.js";

export const FORMAT_NAME = "nli-tasks-v1";
export const ALPHABET = "pad,sep,int[-50,50]";

export function headerLine(): string {
  return JSON.stringify({
    format: FORMAT_NAME,
    l_max: L_MAX,
    v_io: V_IO,
    alphabet: ALPHABET,
  });
}

export function recordLine(rec: Record): string {
  return JSON.stringify({
    split: rec.split,
    program: rec.program,
    descriptor: rec.descriptor,
    pairs: rec.pairs.map((p) => ({ x: p.x, y: p.y })),
    task_id: rec.task_id,
  });
}

export type ParsedFile = {
  header: { format: string; l_max: number; v_io: number; alphabet: string };
  records: Array<{
    split: string;
    program: string | null;
    pairs: Array<{ x: number[]; y: number[] }>;
    task_id?: string;
    line: number; // 1-based line number in the file
  }>;
};

export function parseFile(text: string): ParsedFile {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new Error("empty dataset file");
  const header = JSON.parse(lines[0]!);
  if (header.format !== FORMAT_NAME) {
    throw new Error(`unsupported format ${header.format}`);
  }
  const records = lines.slice(1).map((line, i) => {
    const obj = JSON.parse(line);
    return { ...obj, line: i + 2 };
  });
  return { header, records };
}
