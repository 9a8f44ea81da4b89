import { describe, expect, it } from 'vitest';

import type { AdvisoryDef } from '../src/api.js';
import { advisoryHeadline, categoryLabel, severityLabel } from '../src/format.js';

const advisory: AdvisoryDef = {
  rank: 1,
  statement: 'No evidence of drought',
  display: 'No evidence of drought',
  season: null,
  severity: 'none',
  cf: 0.4,
  cf_percent: 40,
  mitigation: null,
};

describe('formatting', () => {
  it('headline shows the service-provided percentage verbatim', () => {
    expect(advisoryHeadline(advisory)).toBe('No evidence of drought — 40%');
  });

  it('severity labels', () => {
    expect(severityLabel('none')).toBe('no drought signal');
    expect(severityLabel('evidence')).toBe('drought signal');
  });

  it('category labels capitalize', () => {
    expect(categoryLabel('animal')).toBe('Animal');
  });
});
