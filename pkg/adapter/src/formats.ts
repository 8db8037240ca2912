import { mkdirSync, renameSync, writeFileSync } from 'node:fs';
import { dirname } from 'node:path';

// File formats of the dataproxy toolkit, version 1. Emitted byte-compatible
// with its readers: LF line endings, UTF-8, versioned headers.

export const FORMAT_VERSION = 1;

export interface ManifestEntry {
  id: string;
  split: 'train' | 'test';
  label: number;
}

export interface ProbeColumn {
  id: string;
  role: 'lower' | 'upper';
  /** per-test-sample correctness, manifest test order */
  correct: boolean[];
}

function atomicWrite(path: string, payload: string | Buffer): void {
  mkdirSync(dirname(path), { recursive: true });
  const tmp = `${path}.tmp`;
  writeFileSync(tmp, payload);
  renameSync(tmp, path);
}

export function writeManifest(path: string, numLabels: number, entries: ManifestEntry[]): void {
  const lines = [JSON.stringify({ format: 'dpx-manifest', version: FORMAT_VERSION, num_labels: numLabels })];
  for (const entry of entries) {
    lines.push(JSON.stringify({ id: entry.id, split: entry.split, label: entry.label }));
  }
  atomicWrite(path, lines.join('\n') + '\n');
}

/** Mean of 0/1 flags; exact in doubles, so it round-trips through the reader. */
export function flagAccuracy(correct: boolean[]): number {
  const hits = correct.reduce((acc, flag) => acc + (flag ? 1 : 0), 0);
  return hits / correct.length;
}

export function writeOutcomes(path: string, testIds: string[], probes: ProbeColumn[]): void {
  for (const probe of probes) {
    if (probe.correct.length !== testIds.length) {
      throw new Error(`probe ${probe.id}: ${probe.correct.length} flags for ${testIds.length} ids`);
    }
  }
  const lines = [`# dpx-outcomes v${FORMAT_VERSION}`];
  for (const probe of probes) {
    lines.push(`# probe\t${probe.id}\t${probe.role}\t${flagAccuracy(probe.correct)}`);
  }
  lines.push('id\t' + probes.map(p => p.id).join('\t'));
  testIds.forEach((sid, row) => {
    lines.push(sid + '\t' + probes.map(p => (p.correct[row] ? '1' : '0')).join('\t'));
  });
  atomicWrite(path, lines.join('\n') + '\n');
}

/** Binary layout: magic line, JSON header line, then little-endian float32 rows. */
export function writeFeatures(path: string, ids: string[], rows: number[][]): void {
  if (ids.length !== rows.length) {
    throw new Error(`${ids.length} ids for ${rows.length} feature rows`);
  }
  const dim = rows.length > 0 ? rows[0].length : 0;
  for (const row of rows) {
    if (row.length !== dim) throw new Error('ragged feature rows');
  }
  const header = JSON.stringify({ version: FORMAT_VERSION, rows: rows.length, dim, ids });
  const head = Buffer.from(`DPXFEAT v${FORMAT_VERSION}\n${header}\n`, 'utf-8');
  const body = Buffer.alloc(rows.length * dim * 4);
  const view = new DataView(body.buffer, body.byteOffset, body.byteLength);
  let offset = 0;
  for (const row of rows) {
    for (const value of row) {
      view.setFloat32(offset, value, true);
      offset += 4;
    }
  }
  atomicWrite(path, Buffer.concat([head, body]));
}
