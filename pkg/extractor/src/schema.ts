/**
 * Line-delimited record files shared with the ranking pipeline.
 *
 * This package talks to the pipeline only through these files. Readers
 * validate eagerly with line-numbered messages so a malformed file fails
 * here rather than downstream.
 */

import { readFileSync, writeFileSync, renameSync } from "node:fs";
import { dirname, join, basename } from "node:path";

/** Error type for malformed input files. */
export class SchemaViolation extends Error {}

/** Parses a JSONL file into (lineNumber, record) pairs. */
export function readRecords(path: string): [number, Record<string, unknown>][] {
  const text = readFileSync(path, "utf8");
  const out: [number, Record<string, unknown>][] = [];
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  lines.forEach((line, idx) => {
    const lineno = idx + 1;
    if (line.trim() === "") {
      throw new SchemaViolation(`${path}:${lineno}: blank line`);
    }
    let value: unknown;
    try {
      value = JSON.parse(line);
    } catch (err) {
      throw new SchemaViolation(`${path}:${lineno}: ${(err as Error).message}`);
    }
    if (typeof value !== "object" || value === null || Array.isArray(value)) {
      throw new SchemaViolation(`${path}:${lineno}: expected a JSON object`);
    }
    out.push([lineno, value as Record<string, unknown>]);
  });
  return out;
}

/** Writes records as JSONL through a same-directory temp file rename. */
export function writeRecords(path: string, records: Iterable<Record<string, unknown>>): void {
  const body = [...records].map((r) => JSON.stringify(r)).join("\n");
  const payload = body.length > 0 ? body + "\n" : "";
  atomicWrite(path, payload);
}

/** Writes text through a same-directory temp file rename. */
export function atomicWrite(path: string, text: string): void {
  const tmp = join(dirname(path), `.${basename(path)}.tmp-${process.pid}`);
  writeFileSync(tmp, text, "utf8");
  renameSync(tmp, path);
}

/** A context/response instance as stored by the pipeline. */
export interface InstanceRecord {
  id: string;
  /** Utterance texts, oldest first. */
  context: string[];
  response: string;
}

/** Loads instances, checking ids and context shape. */
export function loadInstances(path: string): InstanceRecord[] {
  const out: InstanceRecord[] = [];
  const seen = new Set<string>();
  for (const [lineno, record] of readRecords(path)) {
    const where = `${path}:${lineno}`;
    const id = record["id"];
    if (typeof id !== "string" || id === "") {
      throw new SchemaViolation(`${where}: missing or empty 'id'`);
    }
    if (seen.has(id)) {
      throw new SchemaViolation(`${where}: duplicate instance id '${id}'`);
    }
    seen.add(id);
    const context = record["context"];
    if (!Array.isArray(context) || context.length === 0 || !context.every(isNonEmptyString)) {
      throw new SchemaViolation(`${where}: 'context' must be a non-empty list of utterances`);
    }
    const response = record["response"];
    if (typeof response !== "string" || response === "") {
      throw new SchemaViolation(`${where}: missing or empty 'response'`);
    }
    out.push({ id, context: context as string[], response });
  }
  return out;
}

/** A ranked candidate list for one instance. */
export interface CandidateRecord {
  instanceId: string;
  candidates: string[];
  goldIndex: number;
}

/** Loads candidate sets, checking widths and gold indices. */
export function loadCandidates(path: string): CandidateRecord[] {
  const out: CandidateRecord[] = [];
  const seen = new Set<string>();
  let width: number | null = null;
  for (const [lineno, record] of readRecords(path)) {
    const where = `${path}:${lineno}`;
    const instanceId = record["instance_id"];
    if (typeof instanceId !== "string" || instanceId === "") {
      throw new SchemaViolation(`${where}: missing or empty 'instance_id'`);
    }
    if (seen.has(instanceId)) {
      throw new SchemaViolation(`${where}: duplicate candidate set '${instanceId}'`);
    }
    seen.add(instanceId);
    const candidates = record["candidates"];
    if (!Array.isArray(candidates) || candidates.length < 2 || !candidates.every(isNonEmptyString)) {
      throw new SchemaViolation(`${where}: 'candidates' must list at least 2 utterances`);
    }
    if (width === null) {
      width = candidates.length;
    } else if (candidates.length !== width) {
      throw new SchemaViolation(
        `${where}: expected ${width} candidates, found ${candidates.length}`,
      );
    }
    const goldIndex = record["gold_index"];
    if (typeof goldIndex !== "number" || !Number.isInteger(goldIndex)) {
      throw new SchemaViolation(`${where}: 'gold_index' must be an integer`);
    }
    if (goldIndex < 0 || goldIndex >= candidates.length) {
      throw new SchemaViolation(`${where}: 'gold_index' ${goldIndex} out of range`);
    }
    out.push({ instanceId, candidates: candidates as string[], goldIndex });
  }
  return out;
}

function isNonEmptyString(x: unknown): boolean {
  return typeof x === "string" && x !== "";
}
