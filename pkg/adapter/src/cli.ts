#!/usr/bin/env node
import { parseArgs } from 'node:util';
import { pathToFileURL } from 'node:url';

import { loadDataset, runExportJob } from './export-job.js';
import { loadStubModel } from './stub-model.js';

const USAGE = `usage: dataproxy-adapter --lower-model <json> --upper-model <json> \\
  --dataset <json> --out <dir> [--feature-layer <index-or-name>]

Evaluates two stub probe models on the dataset's test split and writes
manifest.jsonl, outcomes.tsv, train-features.bin, and test-features.bin
in the dataproxy file formats. --feature-layer defaults to the upper
model's penultimate layer (its only layer if it has just one).`;

export function main(argv: string[]): number {
  let values: Record<string, string | boolean | undefined>;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        'lower-model': { type: 'string' },
        'upper-model': { type: 'string' },
        dataset: { type: 'string' },
        out: { type: 'string' },
        'feature-layer': { type: 'string' },
        help: { type: 'boolean' },
      },
    }));
  } catch (e) {
    process.stderr.write(`adapter: error: BadArguments: ${(e as Error).message}\n`);
    return 2;
  }
  if (values.help) {
    process.stdout.write(USAGE + '\n');
    return 0;
  }
  for (const flag of ['lower-model', 'upper-model', 'dataset', 'out'] as const) {
    if (!values[flag]) {
      process.stderr.write(`adapter: error: BadArguments: --${flag} is required\n`);
      return 2;
    }
  }

  try {
    const lowerModel = loadStubModel(values['lower-model'] as string);
    const upperModel = loadStubModel(values['upper-model'] as string);
    const dataset = loadDataset(values.dataset as string);
    const rawLayer = values['feature-layer'] as string | undefined;
    const featureLayer =
      rawLayer === undefined
        ? Math.max(0, upperModel.layers.length - 2)
        : /^\d+$/.test(rawLayer)
          ? Number(rawLayer)
          : rawLayer;
    const result = runExportJob({
      lowerModel,
      upperModel,
      dataset,
      featureLayer,
      outDir: values.out as string,
    });
    process.stdout.write(
      `probes: ${result.probeIds.lower} acc=${result.accuracy.lower.toFixed(4)}, ` +
        `${result.probeIds.upper} acc=${result.accuracy.upper.toFixed(4)}, ` +
        `${result.disagreements} disagreements\n`,
    );
    process.stdout.write(
      `wrote ${Object.values(result.files).join(', ')} (feature dim ${result.featureDim})\n`,
    );
    return 0;
  } catch (e) {
    const err = e as Error;
    process.stderr.write(`adapter: error: ${err.constructor.name}: ${err.message}\n`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
