/** Public library surface. */

export { words, wordPieces, buildSequence, PIECE_WIDTH, CLS, SEP } from "./tokenizer.js";
export type { PieceSequence } from "./tokenizer.js";
export { ToyTransformer, memberConfig, DEFAULT_DIM, DEFAULT_HEADS, DEFAULT_LAYERS, DEFAULT_MAX_LEN } from "./model.js";
export type { ModelConfig, EncodeResult, LayerAttention } from "./model.js";
export { extractImportance, normalize, DEFAULT_EXTRACT_OPTIONS } from "./extract.js";
export type { ExtractOptions, ExtractResult, ImportanceRecord, SkippedInstance } from "./extract.js";
export { scoreCandidates, DEFAULT_SCORE_OPTIONS } from "./score.js";
export type { ScoreOptions, ScoreResult, PredictionRecord } from "./score.js";
export { readRecords, writeRecords, atomicWrite, loadInstances, loadCandidates, SchemaViolation } from "./schema.js";
export type { InstanceRecord, CandidateRecord } from "./schema.js";
export { deriveSeed32, digestParts, makeRng, rngFor } from "./rng.js";
export type { Rng } from "./rng.js";
