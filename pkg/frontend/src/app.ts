// Application controller: one state object, full re-render on change.
// The app is small enough that rebuilding the DOM on every state change is
// simpler and more predictable than incremental updates.

import { ApiClient, ApiError } from './api.js';
import type { AdvisoryDef, IndicatorDef, KbResponse, RuleDef } from './api.js';
import { advisoryHeadline, categoryLabel, describePremise, severityLabel } from './format.js';
import {
  UiSessionState,
  groupByCategory,
  initialState,
  isDirty,
  stage,
  toRequestBody,
  unstage,
  validateStaged,
} from './state.js';
import type { Role, StagedObservation } from './state.js';

interface RuleFormState {
  id: string;
  premisesText: string; // one "object verb value" per line
  connective: 'and' | 'or';
  statement: string;
  season: string;
  cf: string;
  isNew: boolean;
}

interface ConflictState {
  message: string;
  pendingForm: RuleFormState;
}

export class App {
  state: UiSessionState = initialState();
  kb: KbResponse | null = null;
  activeCategory = 'animal';
  pickedIndicator: string | null = null;
  errorBanner: string | null = null;
  notice: string | null = null;
  ruleForm: RuleFormState | null = null;
  conflict: ConflictState | null = null;
  busy = false;

  private inflight: AbortController | null = null;

  constructor(
    private readonly root: HTMLElement,
    readonly client: ApiClient,
  ) {}

  async start(): Promise<void> {
    try {
      this.kb = await this.client.getKb();
      this.state.kbVersion = this.kb.version;
    } catch (error) {
      this.errorBanner = this.describeError(error);
    }
    this.render();
  }

  private describeError(error: unknown): string {
    if (error instanceof ApiError) return `${error.code}: ${error.message}`;
    return error instanceof Error ? error.message : String(error);
  }

  async selectRole(role: Role): Promise<void> {
    this.state.role = role;
    this.errorBanner = null;
    this.notice = null;
    if (role === 'end-user' && this.state.sessionId === null) {
      try {
        const session = await this.client.createSession();
        this.state.sessionId = session.id;
        this.state.kbVersion = session.kb_version;
      } catch (error) {
        this.errorBanner = this.describeError(error);
      }
    }
    this.render();
  }

  stageState(indicator: IndicatorDef, verb: string, value: string): void {
    this.state.staged = stage(this.state.staged, {
      object: indicator.name,
      verb,
      value,
      cfPercent: 100,
    });
    this.render();
  }

  setStagedCf(object: string, value: string, cfPercent: number): void {
    this.state.staged = this.state.staged.map((obs) =>
      obs.object === object && obs.value === value ? { ...obs, cfPercent } : obs,
    );
    this.render();
  }

  removeStaged(object: string, value: string): void {
    this.state.staged = unstage(this.state.staged, object, value);
    this.render();
  }

  async submit(): Promise<void> {
    if (!this.kb || this.state.sessionId === null) return;
    const problems = validateStaged(this.kb.catalog, this.state.staged);
    if (problems.length > 0) {
      this.errorBanner = problems.join('; ');
      this.render();
      return;
    }
    this.inflight?.abort(); // one advise in flight: newest submission wins
    const controller = new AbortController();
    this.inflight = controller;
    this.busy = true;
    this.errorBanner = null;
    this.render();
    const submitted = [...this.state.staged];
    try {
      await this.client.putObservations(this.state.sessionId, toRequestBody(submitted), controller.signal);
      const response = await this.client.advise(this.state.sessionId, controller.signal);
      this.state.lastAdvisories = response.advisories;
      this.state.lastWarnings = response.warnings;
      this.state.lastSubmitted = submitted;
      this.state.kbVersion = response.kb_version;
    } catch (error) {
      if ((error as Error).name === 'AbortError') return;
      this.errorBanner = this.describeError(error); // staged entries stay put
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
        this.busy = false;
      }
    }
    this.render();
  }

  // -- rule editing ---------------------------------------------------------

  openRuleForm(rule: RuleDef | null): void {
    this.notice = null;
    if (rule === null) {
      this.ruleForm = {
        id: '',
        premisesText: '',
        connective: 'and',
        statement: '',
        season: 'unspecified',
        cf: '0.5',
        isNew: true,
      };
    } else {
      this.ruleForm = {
        id: rule.id,
        premisesText: rule.premises.map(describePremise).join('\n'),
        connective: rule.connective,
        statement: rule.conclusion.statement,
        season: rule.conclusion.season ?? 'unspecified',
        cf: String(rule.cf),
        isNew: false,
      };
    }
    this.render();
  }

  private parsePremises(text: string): { object: string; verb: string; value: string }[] | string {
    const premises = [];
    for (const raw of text.split('\n')) {
      const line = raw.trim();
      if (!line) continue;
      const parts = line.split(/\s+/);
      if (parts.length !== 3) return `premise "${line}" must be "object verb value"`;
      premises.push({ object: parts[0], verb: parts[1], value: parts[2] });
    }
    if (premises.length === 0) return 'a rule needs at least one premise';
    return premises;
  }

  async saveRule(): Promise<void> {
    if (!this.ruleForm || !this.kb) return;
    const form = this.ruleForm;
    const premises = this.parsePremises(form.premisesText);
    if (typeof premises === 'string') {
      this.errorBanner = premises;
      this.render();
      return;
    }
    const cf = Number(form.cf);
    if (!form.id.trim()) {
      this.errorBanner = 'the rule needs an id';
      this.render();
      return;
    }
    const body = {
      premises,
      connective: form.connective,
      conclusion: {
        statement: form.statement,
        season: form.season === 'unspecified' ? null : form.season,
      },
      cf,
    };
    try {
      await this.client.putRule(form.id.trim(), body, this.kb.version);
      this.kb = await this.client.getKb();
      this.notice = `saved rule ${form.id.trim()} (knowledge base ${this.kb.version.slice(0, 12)})`;
      this.errorBanner = null;
      this.ruleForm = null;
    } catch (error) {
      if (error instanceof ApiError && error.code === 'kb_conflict') {
        this.conflict = { message: error.message, pendingForm: form };
      } else {
        this.errorBanner = this.describeError(error);
      }
    }
    this.render();
  }

  async deleteRule(ruleId: string): Promise<void> {
    if (!this.kb) return;
    try {
      await this.client.deleteRule(ruleId, this.kb.version);
      this.kb = await this.client.getKb();
      this.notice = `deleted rule ${ruleId}`;
      this.errorBanner = null;
    } catch (error) {
      if (error instanceof ApiError && error.code === 'kb_conflict') {
        this.conflict = { message: error.message, pendingForm: this.ruleForm ?? {
          id: ruleId, premisesText: '', connective: 'and', statement: '', season: 'unspecified', cf: '0.5', isNew: false,
        } };
      } else {
        this.errorBanner = this.describeError(error);
      }
    }
    this.render();
  }

  async reloadAfterConflict(): Promise<void> {
    if (!this.conflict) return;
    const pending = this.conflict.pendingForm;
    this.conflict = null;
    try {
      this.kb = await this.client.getKb();
      this.ruleForm = pending; // keep the user's edits, retry against the new digest
      this.notice = `reloaded knowledge base ${this.kb.version.slice(0, 12)}; review and save again`;
    } catch (error) {
      this.errorBanner = this.describeError(error);
    }
    this.render();
  }

  dismissConflict(): void {
    this.conflict = null;
    this.render();
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    this.root.replaceChildren();
    this.root.append(this.renderHeader());
    if (this.errorBanner) {
      this.root.append(el('div', { class: 'banner error' }, this.errorBanner));
    }
    if (this.notice) {
      this.root.append(el('div', { class: 'banner notice' }, this.notice));
    }
    if (!this.kb) return;
    if (this.state.role === null) {
      this.root.append(this.renderRoleChoice());
    } else if (this.state.role === 'end-user') {
      this.root.append(this.renderConsultation());
    } else {
      this.root.append(this.renderEditor());
    }
    if (this.conflict) {
      this.root.append(this.renderConflictDialog());
    }
  }

  private renderHeader(): HTMLElement {
    const roles = el('nav', { class: 'roles' });
    if (this.state.role !== null) {
      for (const role of ['end-user', 'expert-editor'] as Role[]) {
        roles.append(
          button(
            role === 'end-user' ? 'Consultation' : 'Rule editor',
            () => void this.selectRole(role),
            { class: this.state.role === role ? 'role active' : 'role' },
          ),
        );
      }
    }
    return el(
      'header',
      {},
      el('h1', {}, 'Drought advisory'),
      el('p', { class: 'kb-version' }, this.kb ? `knowledge base ${this.kb.version.slice(0, 12)}` : 'connecting...'),
      roles,
    );
  }

  private renderRoleChoice(): HTMLElement {
    return el(
      'section',
      { class: 'role-choice' },
      el('h2', {}, 'Choose a role'),
      button('Consult as an end user', () => void this.selectRole('end-user'), { class: 'primary', 'data-role': 'end-user' }),
      button('Edit rules as a domain expert', () => void this.selectRole('expert-editor'), { 'data-role': 'expert-editor' }),
    );
  }

  // -- consultation view ----------------------------------------------------

  private renderConsultation(): HTMLElement {
    const section = el('section', { class: 'consultation' });
    section.append(this.renderCatalog());
    section.append(this.renderStaged());
    section.append(this.renderAdvisories());
    return section;
  }

  private renderCatalog(): HTMLElement {
    const kb = this.kb!;
    const groups = groupByCategory(kb.catalog);
    const tabs = el('div', { class: 'tabs', role: 'tablist' });
    for (const category of [...groups.keys()].sort()) {
      tabs.append(
        button(categoryLabel(category), () => {
          this.activeCategory = category;
          this.pickedIndicator = null;
          this.render();
        }, {
          class: this.activeCategory === category ? 'tab active' : 'tab',
          'data-category': category,
        }),
      );
    }
    const list = el('ul', { class: 'indicators' });
    for (const indicator of groups.get(this.activeCategory) ?? []) {
      const item = el('li', { 'data-indicator': indicator.name });
      item.append(
        button(indicator.display_name, () => {
          this.pickedIndicator = this.pickedIndicator === indicator.name ? null : indicator.name;
          this.render();
        }, { class: 'indicator-name' }),
      );
      if (this.pickedIndicator === indicator.name) {
        const states = el('div', { class: 'states' });
        for (const state of indicator.states) {
          states.append(
            button(`${state.verb} ${state.value}`, () => this.stageState(indicator, state.verb, state.value), {
              class: 'state',
              'data-state': state.value,
            }),
          );
        }
        item.append(states);
      }
      list.append(item);
    }
    return el('div', { class: 'catalog' }, el('h2', {}, 'Observed indicators'), tabs, list);
  }

  private renderStaged(): HTMLElement {
    const container = el('div', { class: 'staging' });
    const heading = el('h2', {}, 'Staged observations');
    if (isDirty(this.state)) {
      heading.append(el('span', { class: 'dirty-flag', title: 'not yet submitted' }, ' *'));
    }
    container.append(heading);
    if (this.state.staged.length === 0) {
      container.append(el('p', { class: 'empty' }, 'Nothing staged yet. Pick an indicator state above.'));
    }
    const list = el('ul', { class: 'staged-list' });
    for (const obs of this.state.staged) {
      list.append(this.renderStagedRow(obs));
    }
    container.append(list);
    const submit = button(this.busy ? 'Consulting...' : 'Submit observations', () => void this.submit(), {
      class: 'submit primary',
    });
    if (this.busy) {
      submit.setAttribute('disabled', 'disabled');
    }
    container.append(submit);
    return container;
  }

  private renderStagedRow(obs: StagedObservation): HTMLElement {
    const slider = el('input', {
      type: 'range',
      min: '0',
      max: '100',
      step: '1',
      value: String(obs.cfPercent),
      class: 'cf-slider',
    }) as HTMLInputElement;
    const box = el('input', {
      type: 'number',
      min: '0',
      max: '100',
      step: '1',
      value: String(obs.cfPercent),
      class: 'cf-box',
    }) as HTMLInputElement;
    const update = (raw: string) => {
      const parsed = Number(raw);
      if (Number.isFinite(parsed)) {
        this.setStagedCf(obs.object, obs.value, Math.min(100, Math.max(0, Math.round(parsed))));
      }
    };
    slider.addEventListener('input', () => update(slider.value));
    box.addEventListener('input', () => update(box.value));
    return el(
      'li',
      { class: 'staged', 'data-object': obs.object, 'data-value': obs.value },
      el('span', { class: 'staged-label' }, `${obs.object} ${obs.verb} ${obs.value}`),
      slider,
      box,
      el('span', { class: 'percent-sign' }, '%'),
      button('Remove', () => this.removeStaged(obs.object, obs.value), { class: 'remove' }),
    );
  }

  private renderAdvisories(): HTMLElement {
    const container = el('div', { class: 'advisories' });
    container.append(el('h2', {}, 'Advisory'));
    if (this.state.lastWarnings.length > 0) {
      for (const warning of this.state.lastWarnings) {
        container.append(el('div', { class: 'banner warning' }, warning));
      }
    }
    const advisories = this.state.lastAdvisories;
    if (advisories === null) {
      container.append(el('p', { class: 'empty' }, 'Stage observations and submit to get an advisory.'));
      return container;
    }
    if (advisories.length === 0) {
      container.append(el('p', { class: 'empty' }, 'No applicable rules for the submitted observations.'));
      return container;
    }
    for (const advisory of advisories) {
      container.append(this.renderAdvisoryCard(advisory));
    }
    return container;
  }

  private renderAdvisoryCard(advisory: AdvisoryDef): HTMLElement {
    const bar = el('div', { class: 'cf-bar' });
    const fill = el('div', { class: `cf-fill severity-${advisory.severity}` });
    fill.style.width = `${advisory.cf_percent}%`;
    bar.append(fill);

    const card = el(
      'article',
      { class: 'advisory-card', 'data-rank': String(advisory.rank) },
      el('h3', {}, advisoryHeadline(advisory)),
      el('p', { class: 'severity' }, severityLabel(advisory.severity)),
      bar,
    );
    if (advisory.mitigation) {
      card.append(el('div', { class: 'mitigation' }, advisory.mitigation));
    }
    if (advisory.explain && advisory.explain.length > 0) {
      const details = el('details', { class: 'explain' });
      details.append(el('summary', {}, 'How this confidence was reached'));
      const list = el('ol', {});
      for (const step of advisory.explain) {
        const matched = step.matched.map((m) => `${m.object}=${m.value} (${m.cf})`).join(', ');
        list.append(
          el(
            'li',
            {},
            `rule ${step.rule_id}: premises ${step.premise_cf} -> contribution ${step.contribution_cf} -> running ${step.running_cf} [${matched}]`,
          ),
        );
      }
      details.append(list);
      card.append(details);
    }
    return card;
  }

  // -- editor view ----------------------------------------------------------

  private renderEditor(): HTMLElement {
    const kb = this.kb!;
    const section = el('section', { class: 'editor' });
    section.append(el('h2', {}, 'Rules'));
    const table = el('table', { class: 'rules' });
    const head = el('tr', {});
    for (const title of ['Rule', 'Premises', 'Conclusion', 'Confidence', '']) {
      head.append(el('th', {}, title));
    }
    table.append(head);
    for (const rule of kb.rules) {
      const row = el('tr', { 'data-rule': rule.id });
      row.append(el('td', { class: 'rule-id' }, rule.id));
      row.append(el('td', {}, rule.premises.map(describePremise).join(` ${rule.connective} `)));
      row.append(
        el(
          'td',
          {},
          rule.conclusion.statement + (rule.conclusion.season ? `, onset of ${rule.conclusion.season}` : ''),
        ),
      );
      row.append(el('td', { class: 'rule-cf' }, String(rule.cf)));
      const actions = el('td', {});
      actions.append(button('Edit', () => this.openRuleForm(rule), { class: 'edit-rule' }));
      actions.append(button('Delete', () => void this.deleteRule(rule.id), { class: 'delete-rule' }));
      row.append(actions);
      table.append(row);
    }
    section.append(table);
    section.append(button('New rule', () => this.openRuleForm(null), { class: 'new-rule' }));
    if (this.ruleForm) {
      section.append(this.renderRuleForm());
    }
    return section;
  }

  private renderRuleForm(): HTMLElement {
    const form = this.ruleForm!;
    const idInput = el('input', {
      class: 'rule-form-id',
      value: form.id,
    }) as HTMLInputElement;
    idInput.readOnly = !form.isNew;
    idInput.addEventListener('input', () => (form.id = idInput.value));

    const premises = el('textarea', { class: 'rule-form-premises', rows: '4' }) as HTMLTextAreaElement;
    premises.value = form.premisesText;
    premises.addEventListener('input', () => (form.premisesText = premises.value));

    const connective = el('select', { class: 'rule-form-connective' }) as HTMLSelectElement;
    for (const option of ['and', 'or']) {
      connective.append(el('option', { value: option }, option));
    }
    connective.value = form.connective;
    connective.addEventListener('change', () => (form.connective = connective.value as 'and' | 'or'));

    const statement = el('input', { class: 'rule-form-statement', value: form.statement }) as HTMLInputElement;
    statement.addEventListener('input', () => (form.statement = statement.value));

    const season = el('select', { class: 'rule-form-season' }) as HTMLSelectElement;
    for (const option of ['unspecified', 'spring', 'summer', 'autumn', 'winter']) {
      season.append(el('option', { value: option }, option));
    }
    season.value = form.season;
    season.addEventListener('change', () => (form.season = season.value));

    const cf = el('input', {
      class: 'rule-form-cf',
      type: 'number',
      min: '0',
      max: '1',
      step: '0.01',
      value: form.cf,
    }) as HTMLInputElement;
    cf.addEventListener('input', () => (form.cf = cf.value));

    return el(
      'form',
      { class: 'rule-form' },
      labelled('Id', idInput),
      labelled('Premises (one per line: object verb value)', premises),
      labelled('Connective', connective),
      labelled('Conclusion statement', statement),
      labelled('Season', season),
      labelled('Expert confidence (0-1)', cf),
      button('Save', () => void this.saveRule(), { class: 'save-rule', type: 'button' }),
      button('Cancel', () => {
        this.ruleForm = null;
        this.render();
      }, { type: 'button' }),
    );
  }

  private renderConflictDialog(): HTMLElement {
    return el(
      'div',
      { class: 'conflict-dialog', role: 'dialog' },
      el('h3', {}, 'Someone else edited the knowledge base'),
      el('p', {}, this.conflict!.message),
      el('p', {}, 'Reload the latest version and review your change before saving again.'),
      button('Reload latest', () => void this.reloadAfterConflict(), { class: 'conflict-reload' }),
      button('Discard my change', () => this.dismissConflict(), { class: 'conflict-discard' }),
    );
  }
}

// -- tiny DOM helpers ---------------------------------------------------------

function el(tag: string, attrs: Record<string, string> = {}, ...children: (HTMLElement | string)[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

function button(label: string, onClick: () => void, attrs: Record<string, string> = {}): HTMLElement {
  const node = el('button', { type: 'button', ...attrs }, label);
  node.addEventListener('click', onClick);
  return node;
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  return el('label', {}, el('span', {}, text), control);
}
