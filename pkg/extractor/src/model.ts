/**
 * A deterministic toy transformer encoder.
 *
 * Parameters are not trained. Every weight matrix and every embedding is
 * generated on demand from a hash of (member seed, parameter name), so
 * the full model is a pure function of its seed. That gives the
 * pipeline real attention maps and real candidate scores with byte-level
 * reproducibility and no model files to ship.
 */

import { rngFor } from "./rng.js";
import { PieceSequence } from "./tokenizer.js";

/** Model dimensions and the member seed the parameters derive from. */
export interface ModelConfig {
  /** Embedding width. Must be divisible by heads. */
  dim: number;
  /** Attention heads per layer. */
  heads: number;
  /** Encoder layers. */
  layers: number;
  /** Hard cap on sequence length in pieces. */
  maxLen: number;
  /** Seed tag distinguishing model members. */
  seed: string;
}

export const DEFAULT_DIM = 32;
export const DEFAULT_HEADS = 4;
export const DEFAULT_LAYERS = 2;
export const DEFAULT_MAX_LEN = 128;

/** Builds a config from a base seed and a member index. */
export function memberConfig(seed: number, member: number, maxLen: number): ModelConfig {
  return {
    dim: DEFAULT_DIM,
    heads: DEFAULT_HEADS,
    layers: DEFAULT_LAYERS,
    maxLen,
    seed: `${seed}/m${member}`,
  };
}

/** Attention weights of one layer: [head][query][key], rows sum to 1. */
export type LayerAttention = number[][][];

/** Encoder output. */
export interface EncodeResult {
  /** Final hidden states, [position][dim]. */
  states: number[][];
  /** Attention maps per layer, outermost index is the layer. */
  attentions: LayerAttention[];
}

type Matrix = number[][];

/** Deterministic parameter store, lazily generated and cached. */
export class ToyTransformer {
  readonly config: ModelConfig;
  private readonly matrices = new Map<string, Matrix>();
  private readonly vectors = new Map<string, number[]>();

  constructor(config: ModelConfig) {
    if (config.dim % config.heads !== 0) {
      throw new Error(`dim ${config.dim} not divisible by ${config.heads} heads`);
    }
    this.config = config;
  }

  /** Gaussian matrix for a named parameter, scaled by 1/sqrt(cols). */
  private matrix(name: string, rows: number, cols: number): Matrix {
    let m = this.matrices.get(name);
    if (m === undefined) {
      const rng = rngFor(this.config.seed, name);
      const scale = 1 / Math.sqrt(cols);
      m = [];
      for (let r = 0; r < rows; r++) {
        const row = new Array<number>(cols);
        for (let c = 0; c < cols; c++) {
          row[c] = rng.gauss() * scale;
        }
        m.push(row);
      }
      this.matrices.set(name, m);
    }
    return m;
  }

  /** Gaussian embedding vector for a piece string. */
  private embedding(piece: string): number[] {
    let v = this.vectors.get(piece);
    if (v === undefined) {
      const rng = rngFor(this.config.seed, "emb", piece);
      v = new Array<number>(this.config.dim);
      for (let i = 0; i < this.config.dim; i++) {
        v[i] = rng.gauss();
      }
      this.vectors.set(piece, v);
    }
    return v;
  }

  /** Sinusoidal position encoding. */
  private position(pos: number): number[] {
    const { dim } = this.config;
    const v = new Array<number>(dim);
    for (let i = 0; i < dim; i += 2) {
      const freq = Math.pow(10000, -i / dim);
      v[i] = Math.sin(pos * freq);
      if (i + 1 < dim) {
        v[i + 1] = Math.cos(pos * freq);
      }
    }
    return v;
  }

  /** Runs the encoder over a piece sequence. */
  encode(sequence: PieceSequence): EncodeResult {
    const { dim, heads, layers, maxLen } = this.config;
    const n = sequence.pieces.length;
    if (n === 0) {
      throw new Error("cannot encode an empty sequence");
    }
    if (n > maxLen) {
      throw new Error(`sequence of ${n} pieces exceeds the ${maxLen} piece limit`);
    }

    let states: Matrix = sequence.pieces.map((piece, pos) => {
      const emb = this.embedding(piece);
      const pe = this.position(pos);
      const row = new Array<number>(dim);
      for (let i = 0; i < dim; i++) {
        row[i] = (emb[i] as number) + (pe[i] as number);
      }
      return row;
    });

    const attentions: LayerAttention[] = [];
    const headDim = dim / heads;

    for (let layer = 0; layer < layers; layer++) {
      const wq = this.matrix(`l${layer}.wq`, dim, dim);
      const wk = this.matrix(`l${layer}.wk`, dim, dim);
      const wv = this.matrix(`l${layer}.wv`, dim, dim);
      const wo = this.matrix(`l${layer}.wo`, dim, dim);

      const q = matmul(states, wq);
      const k = matmul(states, wk);
      const v = matmul(states, wv);

      const layerAttn: LayerAttention = [];
      const mixed: Matrix = states.map(() => new Array<number>(dim).fill(0));

      for (let h = 0; h < heads; h++) {
        const offset = h * headDim;
        const scores: Matrix = [];
        for (let qi = 0; qi < n; qi++) {
          const row = new Array<number>(n);
          for (let ki = 0; ki < n; ki++) {
            let dot = 0;
            for (let d = 0; d < headDim; d++) {
              dot += (q[qi]![offset + d] as number) * (k[ki]![offset + d] as number);
            }
            row[ki] = dot / Math.sqrt(headDim);
          }
          scores.push(softmax(row));
        }
        layerAttn.push(scores);
        for (let qi = 0; qi < n; qi++) {
          const outRow = mixed[qi] as number[];
          for (let ki = 0; ki < n; ki++) {
            const w = scores[qi]![ki] as number;
            for (let d = 0; d < headDim; d++) {
              outRow[offset + d] = (outRow[offset + d] as number) + w * (v[ki]![offset + d] as number);
            }
          }
        }
      }
      attentions.push(layerAttn);

      const projected = matmul(mixed, wo);
      states = states.map((row, idx) =>
        layerNorm(row.map((x, i) => x + (projected[idx]![i] as number))),
      );

      const w1 = this.matrix(`l${layer}.ff1`, dim, 2 * dim);
      const w2 = this.matrix(`l${layer}.ff2`, 2 * dim, dim);
      const hidden = matmul(states, w1).map((row) => row.map(Math.tanh));
      const ff = matmul(hidden, w2);
      states = states.map((row, idx) =>
        layerNorm(row.map((x, i) => x + (ff[idx]![i] as number))),
      );
    }

    return { states, attentions };
  }

  /** Scalar readout from the first position's final state. */
  readout(states: Matrix): number {
    const rng = rngFor(this.config.seed, "readout");
    const first = states[0];
    if (first === undefined) {
      throw new Error("cannot read out of an empty state matrix");
    }
    let acc = 0;
    for (let i = 0; i < first.length; i++) {
      acc += (first[i] as number) * rng.gauss();
    }
    return acc / Math.sqrt(first.length);
  }
}

function matmul(a: Matrix, b: Matrix): Matrix {
  const inner = b.length;
  const cols = (b[0] as number[]).length;
  return a.map((row) => {
    const out = new Array<number>(cols);
    for (let c = 0; c < cols; c++) {
      let acc = 0;
      for (let k = 0; k < inner; k++) {
        acc += (row[k] as number) * ((b[k] as number[])[c] as number);
      }
      out[c] = acc;
    }
    return out;
  });
}

function softmax(row: number[]): number[] {
  let max = -Infinity;
  for (const x of row) {
    if (x > max) max = x;
  }
  const exps = row.map((x) => Math.exp(x - max));
  const total = exps.reduce((s, x) => s + x, 0);
  return exps.map((x) => x / total);
}

function layerNorm(row: number[]): number[] {
  const n = row.length;
  const mean = row.reduce((s, x) => s + x, 0) / n;
  const variance = row.reduce((s, x) => s + (x - mean) * (x - mean), 0) / n;
  const inv = 1 / Math.sqrt(variance + 1e-8);
  return row.map((x) => (x - mean) * inv);
}
