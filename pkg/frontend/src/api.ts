// Typed client for the advisory service. Every number shown anywhere in
// the UI comes out of these response types; the UI itself never computes
// a confidence.

export interface StateDef {
  verb: string;
  value: string;
}

export interface IndicatorDef {
  name: string;
  display_name: string;
  category: string;
  states: StateDef[];
}

export interface PremiseDef {
  object: string;
  verb: string;
  value: string;
}

export interface ConclusionDef {
  statement: string;
  season: string | null;
  severity: string;
}

export interface RuleDef {
  id: string;
  premises: PremiseDef[];
  connective: 'and' | 'or';
  conclusion: ConclusionDef;
  cf: number;
  knowledge_kind: string;
}

export interface KbResponse {
  version: string;
  catalog: IndicatorDef[];
  rules: RuleDef[];
  mitigations: Record<string, string>;
}

export interface MatchedObservation {
  object: string;
  value: string;
  cf: number;
}

export interface ExplainStep {
  rule_id: string;
  premise_cf: number;
  contribution_cf: number;
  running_cf: number;
  matched: MatchedObservation[];
}

export interface AdvisoryDef {
  rank: number;
  statement: string;
  display: string;
  season: string | null;
  severity: string;
  cf: number;
  cf_percent: number;
  mitigation: string | null;
  explain?: ExplainStep[];
}

export interface AdviseResponse {
  schema_version: number;
  kb_version: string;
  advisories: AdvisoryDef[];
  warnings: string[];
  skipped: { rule_id: string; missing: PremiseDef[] }[];
}

export interface SessionInfo {
  id: string;
  kb_version: string;
  created_at: string;
}

export interface ObservationBody {
  object: string;
  verb: string;
  value: string;
  cf: number;
}

export interface RuleBody {
  premises: PremiseDef[];
  connective: 'and' | 'or';
  conclusion: { statement: string; season: string | null };
  cf: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function decode<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const error = (body as { error?: { code?: string; message?: string } } | null)?.error;
    throw new ApiError(
      response.status,
      error?.code ?? 'http_error',
      error?.message ?? `request failed with status ${response.status}`,
    );
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly base: string = '') {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers = {
      'Content-Type': 'application/json',
      ...((init.headers as Record<string, string> | undefined) ?? {}),
    };
    const response = await fetch(this.base + path, { ...init, headers });
    return decode<T>(response);
  }

  health(): Promise<{ status: string }> {
    return this.request('/api/health');
  }

  getKb(): Promise<KbResponse> {
    return this.request('/api/kb');
  }

  createSession(): Promise<SessionInfo> {
    return this.request('/api/sessions', { method: 'POST' });
  }

  putObservations(
    sessionId: string,
    observations: ObservationBody[],
    signal?: AbortSignal,
  ): Promise<{ session_id: string; count: number }> {
    return this.request(`/api/sessions/${sessionId}/observations`, {
      method: 'PUT',
      body: JSON.stringify({ observations }),
      signal,
    });
  }

  advise(sessionId: string, signal?: AbortSignal): Promise<AdviseResponse> {
    return this.request(`/api/sessions/${sessionId}/advise`, { method: 'POST', signal });
  }

  rebase(sessionId: string): Promise<{ session_id: string; kb_version: string; kb_rebased: boolean }> {
    return this.request(`/api/sessions/${sessionId}/rebase`, { method: 'POST' });
  }

  putRule(ruleId: string, rule: RuleBody, ifMatch: string): Promise<{ kb_version: string }> {
    return this.request(`/api/kb/rules/${ruleId}`, {
      method: 'PUT',
      body: JSON.stringify(rule),
      headers: { 'If-Match': ifMatch },
    });
  }

  deleteRule(ruleId: string, ifMatch: string): Promise<{ kb_version: string }> {
    return this.request(`/api/kb/rules/${ruleId}`, {
      method: 'DELETE',
      headers: { 'If-Match': ifMatch },
    });
  }
}
