import { readFileSync } from 'node:fs';

export type Activation = 'linear' | 'relu' | 'tanh' | 'softmax';

const ACTIVATIONS: readonly Activation[] = ['linear', 'relu', 'tanh', 'softmax'];

export interface StubLayer {
  name?: string;
  /** weights[i][j] connects input i to output j */
  weights: number[][];
  bias: number[];
  activation: Activation;
}

export interface StubModel {
  name: string;
  layers: StubLayer[];
}

export class ModelFormatError extends Error {}

export class LayerNotFound extends Error {}

function fail(model: string, message: string): never {
  throw new ModelFormatError(`${model}: ${message}`);
}

/** Check layer shapes chain and all entries are finite numbers. */
export function validateModel(model: StubModel): StubModel {
  if (!model.name) fail('<unnamed>', 'model needs a name');
  if (!Array.isArray(model.layers) || model.layers.length === 0) {
    fail(model.name, 'model needs at least one layer');
  }
  let prevDim: number | null = null;
  model.layers.forEach((layer, i) => {
    const where = `layer ${i}${layer.name ? ` (${layer.name})` : ''}`;
    if (!Array.isArray(layer.weights) || layer.weights.length === 0) {
      fail(model.name, `${where}: weights must be a non-empty matrix`);
    }
    const cols = layer.weights[0].length;
    if (cols === 0) fail(model.name, `${where}: weights need at least one column`);
    for (const row of layer.weights) {
      if (row.length !== cols) fail(model.name, `${where}: ragged weight rows`);
      for (const v of row) {
        if (typeof v !== 'number' || !Number.isFinite(v)) {
          fail(model.name, `${where}: non-finite weight`);
        }
      }
    }
    if (!Array.isArray(layer.bias) || layer.bias.length !== cols) {
      fail(model.name, `${where}: bias length must equal output dim ${cols}`);
    }
    for (const v of layer.bias) {
      if (typeof v !== 'number' || !Number.isFinite(v)) {
        fail(model.name, `${where}: non-finite bias`);
      }
    }
    if (!ACTIVATIONS.includes(layer.activation)) {
      fail(model.name, `${where}: unknown activation '${layer.activation}'`);
    }
    if (prevDim !== null && layer.weights.length !== prevDim) {
      fail(model.name, `${where}: expects ${layer.weights.length} inputs, got ${prevDim}`);
    }
    prevDim = cols;
  });
  return model;
}

export function loadStubModel(path: string): StubModel {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, 'utf-8'));
  } catch (e) {
    throw new ModelFormatError(`${path}: not valid JSON: ${(e as Error).message}`);
  }
  return validateModel(parsed as StubModel);
}

export function inputDim(model: StubModel): number {
  return model.layers[0].weights.length;
}

function applyActivation(kind: Activation, values: number[]): number[] {
  switch (kind) {
    case 'linear':
      return values;
    case 'relu':
      return values.map(v => Math.max(0, v));
    case 'tanh':
      return values.map(v => Math.tanh(v));
    case 'softmax': {
      // shift by the max so exp stays finite
      const peak = Math.max(...values);
      const exps = values.map(v => Math.exp(v - peak));
      const total = exps.reduce((a, b) => a + b, 0);
      return exps.map(v => v / total);
    }
  }
}

function layerApply(layer: StubLayer, input: number[]): number[] {
  const cols = layer.weights[0].length;
  const out = new Array<number>(cols);
  for (let j = 0; j < cols; j++) {
    let acc = layer.bias[j];
    for (let i = 0; i < input.length; i++) {
      acc += input[i] * layer.weights[i][j];
    }
    out[j] = acc;
  }
  return applyActivation(layer.activation, out);
}

/** Outputs of every layer for one input vector, in layer order. */
export function layerOutputs(model: StubModel, input: number[]): number[][] {
  if (input.length !== inputDim(model)) {
    throw new ModelFormatError(
      `${model.name}: input dim ${input.length}, model expects ${inputDim(model)}`,
    );
  }
  const outputs: number[][] = [];
  let current = input;
  for (const layer of model.layers) {
    current = layerApply(layer, current);
    outputs.push(current);
  }
  return outputs;
}

export function forward(model: StubModel, input: number[]): number[] {
  const outputs = layerOutputs(model, input);
  return outputs[outputs.length - 1];
}

/** Resolve a layer selector (index or name) to a layer index. */
export function resolveLayer(model: StubModel, selector: number | string): number {
  if (typeof selector === 'number') {
    if (!Number.isInteger(selector) || selector < 0 || selector >= model.layers.length) {
      throw new LayerNotFound(
        `${model.name}: no layer ${selector} (model has ${model.layers.length})`,
      );
    }
    return selector;
  }
  const index = model.layers.findIndex(layer => layer.name === selector);
  if (index < 0) {
    throw new LayerNotFound(`${model.name}: no layer named '${selector}'`);
  }
  return index;
}

/** Feature vectors: the selected layer's output per input, row per input. */
export function extractFeatures(
  model: StubModel,
  inputs: number[][],
  selector: number | string,
): number[][] {
  const index = resolveLayer(model, selector);
  return inputs.map(input => layerOutputs(model, input)[index]);
}

/** Predicted label per input: argmax of the final layer, ties to the lowest index. */
export function predict(model: StubModel, inputs: number[][]): number[] {
  return inputs.map(input => {
    const logits = forward(model, input);
    let best = 0;
    for (let i = 1; i < logits.length; i++) {
      if (logits[i] > logits[best]) best = i;
    }
    return best;
  });
}
