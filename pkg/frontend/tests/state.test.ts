import { describe, expect, it } from 'vitest';

import type { IndicatorDef } from '../src/api.js';
import {
  groupByCategory,
  initialState,
  isDirty,
  stage,
  toRequestBody,
  unstage,
  validateStaged,
} from '../src/state.js';
import type { StagedObservation } from '../src/state.js';

const catalog: IndicatorDef[] = [
  {
    name: 'soil_moisture',
    display_name: 'Soil moisture',
    category: 'meteorological',
    states: [
      { verb: 'is', value: 'high' },
      { verb: 'is', value: 'low' },
    ],
  },
  {
    name: 'umphenjane',
    display_name: 'Umphenejane tree',
    category: 'plant',
    states: [{ verb: 'is', value: 'blooming' }],
  },
];

const obs = (object: string, value: string, cfPercent = 100): StagedObservation => ({
  object,
  verb: 'is',
  value,
  cfPercent,
});

describe('staging', () => {
  it('keeps one entry per object/value pair', () => {
    let staged = stage([], obs('soil_moisture', 'high', 50));
    staged = stage(staged, obs('soil_moisture', 'high', 80));
    expect(staged).toHaveLength(1);
    expect(staged[0].cfPercent).toBe(80);
  });

  it('allows contradictory values as separate entries', () => {
    let staged = stage([], obs('soil_moisture', 'high'));
    staged = stage(staged, obs('soil_moisture', 'low'));
    expect(staged).toHaveLength(2);
  });

  it('unstage removes exactly the keyed entry', () => {
    let staged = stage([], obs('soil_moisture', 'high'));
    staged = stage(staged, obs('umphenjane', 'blooming'));
    staged = unstage(staged, 'soil_moisture', 'high');
    expect(staged.map((o) => o.object)).toEqual(['umphenjane']);
  });
});

describe('dirty flag', () => {
  it('is clean initially and after a matching submit', () => {
    const state = initialState();
    expect(isDirty(state)).toBe(false);
    state.staged = [obs('soil_moisture', 'high', 70)];
    expect(isDirty(state)).toBe(true);
    state.lastSubmitted = [obs('soil_moisture', 'high', 70)];
    expect(isDirty(state)).toBe(false);
  });

  it('confidence changes make the state dirty again', () => {
    const state = initialState();
    state.staged = [obs('soil_moisture', 'high', 70)];
    state.lastSubmitted = [obs('soil_moisture', 'high', 70)];
    state.staged = [obs('soil_moisture', 'high', 71)];
    expect(isDirty(state)).toBe(true);
  });
});

describe('client-side validation', () => {
  it('accepts catalog-backed observations', () => {
    expect(validateStaged(catalog, [obs('soil_moisture', 'high', 40)])).toEqual([]);
  });

  it('rejects unknown indicators and states', () => {
    expect(validateStaged(catalog, [obs('unicorn', 'sighted')])).toHaveLength(1);
    expect(validateStaged(catalog, [obs('soil_moisture', 'purple')])).toHaveLength(1);
  });

  it('rejects out-of-range slider values', () => {
    expect(validateStaged(catalog, [obs('soil_moisture', 'high', 101)])).toHaveLength(1);
    expect(validateStaged(catalog, [obs('soil_moisture', 'high', -1)])).toHaveLength(1);
  });
});

describe('request encoding', () => {
  it('converts slider percentages to unit confidences', () => {
    expect(toRequestBody([obs('soil_moisture', 'high', 90)])).toEqual([
      { object: 'soil_moisture', verb: 'is', value: 'high', cf: 0.9 },
    ]);
  });
});

describe('catalog grouping', () => {
  it('groups and sorts by display name', () => {
    const groups = groupByCategory(catalog);
    expect([...groups.keys()].sort()).toEqual(['meteorological', 'plant']);
    expect(groups.get('plant')![0].name).toBe('umphenjane');
  });
});
