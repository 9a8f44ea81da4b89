// Small presentation helpers. These format service-provided values; they
// never derive new confidences.

import type { AdvisoryDef } from './api.js';

export function advisoryHeadline(advisory: AdvisoryDef): string {
  return `${advisory.display} — ${advisory.cf_percent}%`;
}

export function severityLabel(severity: string): string {
  switch (severity) {
    case 'none':
      return 'no drought signal';
    case 'moderate':
      return 'moderate drought signal';
    case 'evidence':
      return 'drought signal';
    default:
      return severity;
  }
}

export function categoryLabel(category: string): string {
  return category.charAt(0).toUpperCase() + category.slice(1);
}

export function describePremise(p: { object: string; verb: string; value: string }): string {
  return `${p.object} ${p.verb} ${p.value}`;
}
