/**
 * Candidate scoring in the pipeline's predictions format.
 *
 * Each candidate is appended to the context behind a separator, encoded,
 * and read out as a scalar logit, giving one record of k logits per
 * instance. Multiple members rerun the model with member-specific
 * parameters, and multiple passes add seeded per-pass noise to the
 * logits so downstream variance aggregation has something to aggregate.
 */

import { ToyTransformer, memberConfig, DEFAULT_MAX_LEN } from "./model.js";
import { buildSequence, words } from "./tokenizer.js";
import { CandidateRecord, InstanceRecord, SchemaViolation } from "./schema.js";
import { rngFor } from "./rng.js";
import { SkippedInstance } from "./extract.js";

/** Options for a scoring run. */
export interface ScoreOptions {
  /** Base seed for model parameters and pass noise. */
  seed: number;
  /** Stochastic passes per member; 1 disables noise. */
  passes: number;
  /** Model members with independent parameters. */
  members: number;
  /** Per-pass logit noise scale. */
  noise: number;
  /** Maximum sequence length in pieces; longer pairs skip the instance. */
  maxLen: number;
}

export const DEFAULT_SCORE_OPTIONS: ScoreOptions = {
  seed: 0,
  passes: 1,
  members: 1,
  noise: 0.05,
  maxLen: DEFAULT_MAX_LEN,
};

/** One predictions row, pipeline schema. */
export interface PredictionRecord {
  instance_id: string;
  logits: number[];
  method: string;
  member?: number;
  pass?: number;
}

/** Scoring output: prediction rows plus the skip list for the sidecar. */
export interface ScoreResult {
  records: PredictionRecord[];
  skipped: SkippedInstance[];
}

/** Scores every candidate set against its instance's context. */
export function scoreCandidates(
  instances: InstanceRecord[],
  candidateSets: CandidateRecord[],
  options: ScoreOptions = DEFAULT_SCORE_OPTIONS,
): ScoreResult {
  if (options.passes < 1) {
    throw new Error(`passes must be >= 1, got ${options.passes}`);
  }
  if (options.members < 1) {
    throw new Error(`members must be >= 1, got ${options.members}`);
  }
  if (options.noise < 0) {
    throw new Error(`noise must be >= 0, got ${options.noise}`);
  }
  const byId = new Map(instances.map((inst) => [inst.id, inst]));
  const method =
    options.passes > 1 ? "dropout" : options.members > 1 ? "ensemble" : "vanilla";

  const records: PredictionRecord[] = [];
  const skipped: SkippedInstance[] = [];
  const models = Array.from(
    { length: options.members },
    (_, m) => new ToyTransformer(memberConfig(options.seed, m, options.maxLen)),
  );

  for (const set of candidateSets) {
    const instance = byId.get(set.instanceId);
    if (instance === undefined) {
      throw new SchemaViolation(`candidate set '${set.instanceId}' has no instance`);
    }
    const contextGroups = instance.context.map(words);
    const sequences = set.candidates.map((cand) =>
      buildSequence([...contextGroups, words(cand)]),
    );
    const longest = Math.max(...sequences.map((s) => s.pieces.length));
    if (longest > options.maxLen) {
      skipped.push({ id: set.instanceId, pieces: longest, limit: options.maxLen });
      continue;
    }

    for (let m = 0; m < options.members; m++) {
      const model = models[m] as ToyTransformer;
      const base = sequences.map((seq) => model.readout(model.encode(seq).states));
      for (let p = 0; p < options.passes; p++) {
        let logits = base;
        if (options.passes > 1) {
          const noiseRng = rngFor(options.seed, set.instanceId, "pass", m, p);
          logits = base.map((x) => x + options.noise * noiseRng.gauss());
        }
        const record: PredictionRecord = {
          instance_id: set.instanceId,
          logits,
          method,
        };
        if (options.members > 1) {
          record.member = m;
        }
        if (options.passes > 1) {
          record.pass = p;
        }
        records.push(record);
      }
    }
  }

  return { records, skipped };
}
