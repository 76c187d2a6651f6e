#!/usr/bin/env node
/**
 * Command-line entry point.
 *
 * Two commands cover the package's job: `extract` writes an importance
 * file from context attention, `score` writes a predictions file over
 * candidate sets. Both write a manifest sidecar recording the
 * configuration and the SHA-256 digests of every file read and written,
 * plus a skip sidecar naming instances that exceeded the length limit.
 */

import { parseArgs } from "node:util";
import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import { loadInstances, loadCandidates, writeRecords, atomicWrite, SchemaViolation } from "./schema.js";
import { extractImportance } from "./extract.js";
import { scoreCandidates } from "./score.js";
import { DEFAULT_MAX_LEN } from "./model.js";

const USAGE = `usage: attn-extractor <command> [options]

commands:
  extract   write per-token context importance scores
            --in <instances.jsonl> --out <importance.jsonl>
            [--seed N] [--max-len N]
  score     write candidate logits in the predictions format
            --in <instances.jsonl> --candidates <candidates.jsonl>
            --out <predictions.jsonl>
            [--seed N] [--passes N] [--members N] [--noise X] [--max-len N]
`;

function usageError(message: string): never {
  process.stderr.write(`error: ${message}\n\n${USAGE}`);
  process.exit(2);
}

function sha256(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

function writeSidecars(
  out: string,
  command: string,
  config: Record<string, unknown>,
  inputs: string[],
  skipped: unknown[],
): void {
  const skipPath = `${out}.skipped.json`;
  atomicWrite(skipPath, JSON.stringify({ skipped }, null, 2) + "\n");
  const manifest = {
    tool: "attn-extractor",
    command,
    config,
    inputs: Object.fromEntries(inputs.map((p) => [p, sha256(p)])),
    outputs: Object.fromEntries([out, skipPath].map((p) => [p, sha256(p)])),
  };
  atomicWrite(`${out}.manifest.json`, JSON.stringify(manifest, null, 2) + "\n");
}

function parseCount(raw: string | undefined, fallback: number, flag: string): number {
  if (raw === undefined) {
    return fallback;
  }
  const value = Number(raw);
  if (!Number.isInteger(value) || value < 1) {
    usageError(`${flag} must be a positive integer, got '${raw}'`);
  }
  return value;
}

function parseNoise(raw: string | undefined, fallback: number): number {
  if (raw === undefined) {
    return fallback;
  }
  const value = Number(raw);
  if (!Number.isFinite(value) || value < 0) {
    usageError(`--noise must be a non-negative number, got '${raw}'`);
  }
  return value;
}

function parseSeed(raw: string | undefined): number {
  if (raw === undefined) {
    return 0;
  }
  const value = Number(raw);
  if (!Number.isInteger(value)) {
    usageError(`--seed must be an integer, got '${raw}'`);
  }
  return value;
}

function runExtract(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      in: { type: "string" },
      out: { type: "string" },
      seed: { type: "string" },
      "max-len": { type: "string" },
    },
  });
  if (values.in === undefined || values.out === undefined) {
    usageError("extract needs --in and --out");
  }
  const options = {
    seed: parseSeed(values.seed),
    maxLen: parseCount(values["max-len"], DEFAULT_MAX_LEN, "--max-len"),
  };
  const instances = loadInstances(values.in);
  const { records, skipped } = extractImportance(instances, options);
  writeRecords(values.out, records as unknown as Record<string, unknown>[]);
  writeSidecars(
    values.out,
    "extract",
    {
      seed: options.seed,
      max_len: options.maxLen,
      layer: "last",
      head_reduction: "mean",
      piece_reduction: "max",
      normalization: "per-instance min-max",
    },
    [values.in],
    skipped,
  );
  process.stdout.write(
    `wrote ${values.out}: ${records.length} instances scored, ${skipped.length} skipped\n`,
  );
  return 0;
}

function runScore(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      in: { type: "string" },
      candidates: { type: "string" },
      out: { type: "string" },
      seed: { type: "string" },
      passes: { type: "string" },
      members: { type: "string" },
      noise: { type: "string" },
      "max-len": { type: "string" },
    },
  });
  if (values.in === undefined || values.candidates === undefined || values.out === undefined) {
    usageError("score needs --in, --candidates and --out");
  }
  const options = {
    seed: parseSeed(values.seed),
    passes: parseCount(values.passes, 1, "--passes"),
    members: parseCount(values.members, 1, "--members"),
    noise: parseNoise(values.noise, 0.05),
    maxLen: parseCount(values["max-len"], DEFAULT_MAX_LEN, "--max-len"),
  };
  const instances = loadInstances(values.in);
  const candidateSets = loadCandidates(values.candidates);
  const { records, skipped } = scoreCandidates(instances, candidateSets, options);
  writeRecords(values.out, records as unknown as Record<string, unknown>[]);
  writeSidecars(
    values.out,
    "score",
    {
      seed: options.seed,
      passes: options.passes,
      members: options.members,
      noise: options.noise,
      max_len: options.maxLen,
      layer: "last",
      head_reduction: "mean",
      readout: "first-position linear",
    },
    [values.in, values.candidates],
    skipped,
  );
  process.stdout.write(
    `wrote ${values.out}: ${records.length} prediction rows, ${skipped.length} instances skipped\n`,
  );
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "extract") {
      return runExtract(rest);
    }
    if (command === "score") {
      return runScore(rest);
    }
    usageError(command === undefined ? "missing command" : `unknown command '${command}'`);
  } catch (err) {
    const code = (err as NodeJS.ErrnoException).code;
    if (typeof code === "string" && code.startsWith("ERR_PARSE_ARGS")) {
      usageError((err as Error).message);
    }
    if (err instanceof Error) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
