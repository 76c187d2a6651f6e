/**
 * Token importance from the toy transformer's attention.
 *
 * For each instance the full context is encoded, the last layer's
 * attention from the first sequence position is averaged over heads,
 * piece weights are pooled to words by max, and the word scores are
 * min-max normalized into [0, 1]. The result is one score per
 * whitespace-level context token, which is exactly what the pipeline's
 * importance file format requires.
 */

import { ToyTransformer, memberConfig, DEFAULT_MAX_LEN } from "./model.js";
import { buildSequence, words } from "./tokenizer.js";
import { InstanceRecord } from "./schema.js";

/** Options for an extraction run. */
export interface ExtractOptions {
  /** Base seed for the deterministic model parameters. */
  seed: number;
  /** Maximum sequence length in pieces; longer instances are skipped. */
  maxLen: number;
}

export const DEFAULT_EXTRACT_OPTIONS: ExtractOptions = {
  seed: 0,
  maxLen: DEFAULT_MAX_LEN,
};

/** One importance row, pipeline schema. */
export interface ImportanceRecord {
  id: string;
  scores: number[];
}

/** An instance that could not be encoded. */
export interface SkippedInstance {
  id: string;
  pieces: number;
  limit: number;
}

/** Extraction output: kept rows plus the skip list for the sidecar. */
export interface ExtractResult {
  records: ImportanceRecord[];
  skipped: SkippedInstance[];
}

/** Runs importance extraction over a list of instances. */
export function extractImportance(
  instances: InstanceRecord[],
  options: ExtractOptions = DEFAULT_EXTRACT_OPTIONS,
): ExtractResult {
  const model = new ToyTransformer(memberConfig(options.seed, 0, options.maxLen));
  const records: ImportanceRecord[] = [];
  const skipped: SkippedInstance[] = [];

  for (const instance of instances) {
    const groups = instance.context.map(words);
    const sequence = buildSequence(groups);
    if (sequence.pieces.length > options.maxLen) {
      skipped.push({ id: instance.id, pieces: sequence.pieces.length, limit: options.maxLen });
      continue;
    }
    const wordCount = groups.reduce((total, g) => total + g.length, 0);
    const { attentions } = model.encode(sequence);
    const lastLayer = attentions[attentions.length - 1]!;

    const pooled = new Array<number>(wordCount).fill(-Infinity);
    for (let pos = 0; pos < sequence.pieces.length; pos++) {
      const w = sequence.wordIndex[pos] as number;
      if (w < 0) {
        continue;
      }
      let mean = 0;
      for (const head of lastLayer) {
        mean += (head[0] as number[])[pos] as number;
      }
      mean /= lastLayer.length;
      if (mean > (pooled[w] as number)) {
        pooled[w] = mean;
      }
    }

    records.push({ id: instance.id, scores: normalize(pooled) });
  }

  return { records, skipped };
}

/**
 * Min-max normalization to [0, 1]. A single word, or a set of words with
 * identical pooled weights, has no spread to normalize over; every such
 * score is defined as 1.0 so the "most important token scores 1" reading
 * stays true.
 */
export function normalize(values: number[]): number[] {
  if (values.length === 0) {
    throw new Error("cannot normalize an empty score list");
  }
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (min === max) {
    return values.map(() => 1.0);
  }
  const span = max - min;
  return values.map((v) => (v - min) / span);
}
