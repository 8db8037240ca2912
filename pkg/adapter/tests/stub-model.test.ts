import { describe, expect, it } from 'vitest';

import {
  LayerNotFound,
  ModelFormatError,
  StubModel,
  extractFeatures,
  forward,
  layerOutputs,
  predict,
  resolveLayer,
  validateModel,
} from '../src/stub-model.js';

// 2-in, 2-hidden (tanh), 2-out (linear); small enough to run by hand.
const twoLayer: StubModel = {
  name: 'hand',
  layers: [
    {
      name: 'hidden',
      weights: [
        [1, -1],
        [0.5, 0.25],
      ],
      bias: [0, 0.5],
      activation: 'tanh',
    },
    {
      name: 'out',
      weights: [
        [2, 0],
        [0, -1],
      ],
      bias: [0.1, 0],
      activation: 'linear',
    },
  ],
};

describe('forward pass', () => {
  it('matches hand-computed activations on the two-layer model', () => {
    // x = [1, 2]: pre-hidden = [1*1 + 2*0.5, 1*-1 + 2*0.25] + [0, 0.5] = [2, 0]
    const [hidden, out] = layerOutputs(twoLayer, [1, 2]);
    expect(hidden[0]).toBeCloseTo(Math.tanh(2), 12);
    expect(hidden[1]).toBeCloseTo(0, 12);
    expect(out[0]).toBeCloseTo(2 * Math.tanh(2) + 0.1, 12);
    expect(out[1]).toBeCloseTo(-0, 12);

    // x = [0, 0]: pre-hidden = [0, 0.5]
    const [h0] = layerOutputs(twoLayer, [0, 0]);
    expect(h0[0]).toBe(0);
    expect(h0[1]).toBeCloseTo(Math.tanh(0.5), 12);

    // x = [-1, 0.5]: pre-hidden = [-1 + 0.25, 1 + 0.125 + 0.5] = [-0.75, 1.625]
    const [h1] = layerOutputs(twoLayer, [-1, 0.5]);
    expect(h1[0]).toBeCloseTo(Math.tanh(-0.75), 12);
    expect(h1[1]).toBeCloseTo(Math.tanh(1.625), 12);
  });

  it('is deterministic', () => {
    const a = forward(twoLayer, [0.3, -0.7]);
    const b = forward(twoLayer, [0.3, -0.7]);
    expect(a).toEqual(b);
  });

  it('applies relu and softmax as defined', () => {
    const model: StubModel = {
      name: 'acts',
      layers: [
        { weights: [[1, 1]], bias: [-0.5, 0.5], activation: 'relu' },
        { weights: [[1, 0], [0, 1]], bias: [0, 0], activation: 'softmax' },
      ],
    };
    const [reluOut, softOut] = layerOutputs(model, [1]);
    expect(reluOut).toEqual([0.5, 1.5]); // max(0, 1 - 0.5), max(0, 1 + 0.5)
    expect(softOut[0] + softOut[1]).toBeCloseTo(1, 12);
    const expected = Math.exp(1.5) / (Math.exp(0.5) + Math.exp(1.5));
    expect(softOut[1]).toBeCloseTo(expected, 12);

    const negative = layerOutputs({ ...model, layers: [model.layers[0]] }, [-2])[0];
    expect(negative).toEqual([0, 0]); // relu clamps both
  });

  it('rejects inputs of the wrong dimension', () => {
    expect(() => forward(twoLayer, [1, 2, 3])).toThrow(ModelFormatError);
  });
});

describe('predict', () => {
  it('argmaxes the final layer with ties to the lowest index', () => {
    const identity: StubModel = {
      name: 'id',
      layers: [{ weights: [[1, 0], [0, 1]], bias: [0, 0], activation: 'linear' }],
    };
    expect(predict(identity, [[3, 1], [1, 3], [2, 2]])).toEqual([0, 1, 0]);
  });
});

describe('layer selection', () => {
  it('resolves names and indices', () => {
    expect(resolveLayer(twoLayer, 'hidden')).toBe(0);
    expect(resolveLayer(twoLayer, 'out')).toBe(1);
    expect(resolveLayer(twoLayer, 1)).toBe(1);
  });

  it('throws LayerNotFound for unknown selectors', () => {
    expect(() => resolveLayer(twoLayer, 'missing')).toThrow(LayerNotFound);
    expect(() => resolveLayer(twoLayer, 2)).toThrow(LayerNotFound);
    expect(() => resolveLayer(twoLayer, -1)).toThrow(LayerNotFound);
  });

  it('extracts the selected layer output per input row', () => {
    const rows = extractFeatures(twoLayer, [[1, 2], [0, 0]], 'hidden');
    expect(rows).toHaveLength(2);
    expect(rows[0][0]).toBeCloseTo(Math.tanh(2), 12);
    expect(rows[1][1]).toBeCloseTo(Math.tanh(0.5), 12);
  });
});

describe('validation', () => {
  it('rejects ragged weights, bad bias, unknown activation, broken chaining', () => {
    const base = () => JSON.parse(JSON.stringify(twoLayer)) as StubModel;

    const ragged = base();
    ragged.layers[0].weights[1] = [1];
    expect(() => validateModel(ragged)).toThrow(/ragged/);

    const badBias = base();
    badBias.layers[0].bias = [0];
    expect(() => validateModel(badBias)).toThrow(/bias length/);

    const badAct = base();
    (badAct.layers[0] as { activation: string }).activation = 'sigmoid';
    expect(() => validateModel(badAct)).toThrow(/unknown activation/);

    const badChain = base();
    badChain.layers[1].weights = [[1, 0]];
    badChain.layers[1].bias = [0, 0];
    expect(() => validateModel(badChain)).toThrow(/inputs/);

    expect(() => validateModel({ name: 'empty', layers: [] })).toThrow(/at least one layer/);
  });
});
