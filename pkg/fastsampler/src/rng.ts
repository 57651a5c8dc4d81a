/** Seeded RNG so record generation is reproducible and order-independent. */

export type Rng = {
  /** float in [0, 1) */
  next(): number;
  /** integer in [lo, hi) */
  int(lo: number, hi: number): number;
  /** pick one element */
  choice<T>(items: readonly T[]): T;
};

/** splitmix32 core: fast, decent quality, stable across platforms. */
export function splitmix32(seed: number): () => number {
  let state = seed | 0;
  return () => {
    state = (state + 0x9e3779b9) | 0;
    let t = state ^ (state >>> 16);
    t = Math.imul(t, 0x21f0aaad);
    t = t ^ (t >>> 15);
    t = Math.imul(t, 0x735a2d97);
    t = t ^ (t >>> 15);
    return (t >>> 0) / 4294967296;
  };
}

/** Mix (seed, splitTag, index) into one 32-bit record seed. */
export function recordSeed(seed: number, splitTag: number, index: number): number {
  let h = 0x811c9dc5 ^ (seed | 0);
  for (const v of [splitTag, index]) {
    h = Math.imul(h ^ (v | 0), 0x01000193);
    h = Math.imul(h ^ (h >>> 13), 0x5bd1e995);
  }
  return h | 0;
}

export function makeRng(seed: number): Rng {
  const next = splitmix32(seed);
  return {
    next,
    int(lo: number, hi: number): number {
      return lo + Math.floor(next() * (hi - lo));
    },
    choice<T>(items: readonly T[]): T {
      return items[Math.floor(next() * items.length)]!;
    },
  };
}
