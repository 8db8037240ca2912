import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import {
  ManifestEntry,
  writeFeatures,
  writeManifest,
  writeOutcomes,
} from './formats.js';
import {
  StubModel,
  extractFeatures,
  inputDim,
  predict,
  resolveLayer,
} from './stub-model.js';

export interface Sample {
  id: string;
  label: number;
  input: number[];
}

export interface Dataset {
  numLabels: number;
  train: Sample[];
  test: Sample[];
}

export interface ExportJob {
  lowerModel: StubModel;
  upperModel: StubModel;
  dataset: Dataset;
  /** layer of the upper model whose output becomes the feature vectors */
  featureLayer: number | string;
  outDir: string;
}

export interface ExportResult {
  files: {
    manifest: string;
    outcomes: string;
    trainFeatures: string;
    testFeatures: string;
  };
  probeIds: { lower: string; upper: string };
  accuracy: { lower: number; upper: number };
  disagreements: number;
  featureDim: number;
}

export class DatasetFormatError extends Error {}

export function loadDataset(path: string): Dataset {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, 'utf-8'));
  } catch (e) {
    throw new DatasetFormatError(`${path}: not valid JSON: ${(e as Error).message}`);
  }
  return validateDataset(parsed as Dataset);
}

export function validateDataset(dataset: Dataset): Dataset {
  if (!Number.isInteger(dataset.numLabels) || dataset.numLabels < 1) {
    throw new DatasetFormatError('numLabels must be a positive integer');
  }
  for (const split of ['train', 'test'] as const) {
    const samples = dataset[split];
    if (!Array.isArray(samples) || samples.length === 0) {
      throw new DatasetFormatError(`${split} split must be a non-empty array`);
    }
  }
  const seen = new Set<string>();
  const dim = dataset.train[0].input.length;
  for (const sample of [...dataset.train, ...dataset.test]) {
    if (!sample.id) throw new DatasetFormatError('every sample needs an id');
    if (seen.has(sample.id)) throw new DatasetFormatError(`duplicate sample id '${sample.id}'`);
    seen.add(sample.id);
    if (!Number.isInteger(sample.label) || sample.label < 0 || sample.label >= dataset.numLabels) {
      throw new DatasetFormatError(
        `sample '${sample.id}': label ${sample.label} outside [0, ${dataset.numLabels})`,
      );
    }
    if (!Array.isArray(sample.input) || sample.input.length !== dim) {
      throw new DatasetFormatError(`sample '${sample.id}': input dim differs from ${dim}`);
    }
    for (const v of sample.input) {
      if (typeof v !== 'number' || !Number.isFinite(v)) {
        throw new DatasetFormatError(`sample '${sample.id}': non-finite input value`);
      }
    }
  }
  return dataset;
}

/** Distinct probe ids even when the same model plays both roles. */
function probeIds(lower: StubModel, upper: StubModel): { lower: string; upper: string } {
  if (lower.name !== upper.name) return { lower: lower.name, upper: upper.name };
  return { lower: `${lower.name}-lower`, upper: `${upper.name}-upper` };
}

/**
 * Evaluate both probes on the test split, extract features with the upper
 * model, and write the four artifact files the proxy generator consumes.
 */
export function runExportJob(job: ExportJob): ExportResult {
  const { dataset } = job;
  validateDataset(dataset);
  const dim = dataset.train[0].input.length;
  for (const model of [job.lowerModel, job.upperModel]) {
    if (inputDim(model) !== dim) {
      throw new DatasetFormatError(
        `model '${model.name}' expects dim ${inputDim(model)}, dataset has ${dim}`,
      );
    }
  }
  resolveLayer(job.upperModel, job.featureLayer); // LayerNotFound before any file is written

  const testInputs = dataset.test.map(s => s.input);
  const testLabels = dataset.test.map(s => s.label);
  const ids = probeIds(job.lowerModel, job.upperModel);
  const lowerCorrect = predict(job.lowerModel, testInputs).map((p, i) => p === testLabels[i]);
  const upperCorrect = predict(job.upperModel, testInputs).map((p, i) => p === testLabels[i]);

  const entries: ManifestEntry[] = [
    ...dataset.train.map(s => ({ id: s.id, split: 'train' as const, label: s.label })),
    ...dataset.test.map(s => ({ id: s.id, split: 'test' as const, label: s.label })),
  ];
  const trainFeatures = extractFeatures(
    job.upperModel,
    dataset.train.map(s => s.input),
    job.featureLayer,
  );
  const testFeatures = extractFeatures(job.upperModel, testInputs, job.featureLayer);

  const files = {
    manifest: join(job.outDir, 'manifest.jsonl'),
    outcomes: join(job.outDir, 'outcomes.tsv'),
    trainFeatures: join(job.outDir, 'train-features.bin'),
    testFeatures: join(job.outDir, 'test-features.bin'),
  };
  writeManifest(files.manifest, dataset.numLabels, entries);
  writeOutcomes(
    files.outcomes,
    dataset.test.map(s => s.id),
    [
      { id: ids.lower, role: 'lower', correct: lowerCorrect },
      { id: ids.upper, role: 'upper', correct: upperCorrect },
    ],
  );
  writeFeatures(files.trainFeatures, dataset.train.map(s => s.id), trainFeatures);
  writeFeatures(files.testFeatures, dataset.test.map(s => s.id), testFeatures);

  const hits = (flags: boolean[]) => flags.filter(Boolean).length;
  return {
    files,
    probeIds: ids,
    accuracy: {
      lower: hits(lowerCorrect) / lowerCorrect.length,
      upper: hits(upperCorrect) / upperCorrect.length,
    },
    disagreements: lowerCorrect.filter((flag, i) => flag !== upperCorrect[i]).length,
    featureDim: testFeatures[0].length,
  };
}
