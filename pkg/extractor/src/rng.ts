/**
 * Deterministic random number generation.
 *
 * Every random quantity in this package is derived by hashing a list of
 * string-convertible parts with SHA-256 and feeding the digest into a
 * small PRNG. The same parts always produce the same stream, across
 * processes and platforms, which makes model parameters and noise draws
 * reproducible without storing any state.
 */

import { createHash } from "node:crypto";

/** Joins parts with an unprintable separator and hashes them. */
export function digestParts(...parts: (string | number)[]): Buffer {
  const joined = parts.map(String).join("\x1f");
  return createHash("sha256").update(joined, "utf8").digest();
}

/** First 4 digest bytes, big-endian, as an unsigned 32-bit seed. */
export function deriveSeed32(...parts: (string | number)[]): number {
  return digestParts(...parts).readUInt32BE(0);
}

/** Deterministic PRNG with uniform and gaussian draws. */
export interface Rng {
  /** Uniform draw in [0, 1). */
  next(): number;
  /** Standard normal draw (Box-Muller). */
  gauss(): number;
}

/**
 * mulberry32, a small 32-bit PRNG with good statistical behaviour for
 * non-cryptographic use. State advances by a Weyl increment and the
 * output is finalized with two xor-shift rounds.
 */
export function makeRng(seed: number): Rng {
  let state = seed >>> 0;
  let spare: number | null = null;

  const next = (): number => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };

  const gauss = (): number => {
    if (spare !== null) {
      const value = spare;
      spare = null;
      return value;
    }
    let u = next();
    while (u === 0) {
      u = next();
    }
    const v = next();
    const radius = Math.sqrt(-2 * Math.log(u));
    const angle = 2 * Math.PI * v;
    spare = radius * Math.sin(angle);
    return radius * Math.cos(angle);
  };

  return { next, gauss };
}

/** PRNG seeded from hashed parts. */
export function rngFor(...parts: (string | number)[]): Rng {
  return makeRng(deriveSeed32(...parts));
}
