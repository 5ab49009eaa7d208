// Workbench wiring: pick a scenario, request ranked queries, run any query
// against the scenario's logs, and record which prediction cracked it.

import { ApiError, Client } from "./api.js";
import type { PredictedQuery, ScenarioSummary, SessionBody } from "./types.js";
import { errorBanner, renderPredictions, resultTable, scenarioListItem, sessionTimeline } from "./views.js";

interface Refs {
  datasetSelect: HTMLSelectElement;
  splitSelect: HTMLSelectElement;
  scenarioList: HTMLElement;
  modelInput: HTMLInputElement;
  reportBox: HTMLTextAreaElement;
  predictButton: HTMLButtonElement;
  predictions: HTMLElement;
  console: HTMLTextAreaElement;
  runButton: HTMLButtonElement;
  results: HTMLElement;
  sessionPanel: HTMLElement;
  errors: HTMLElement;
}

export class Workbench {
  client: Client;
  refs: Refs;
  scenario: ScenarioSummary | null = null;
  session: SessionBody | null = null;
  lastPredictions: PredictedQuery[] = [];

  constructor(client: Client, refs: Refs) {
    this.client = client;
    this.refs = refs;
    refs.datasetSelect.addEventListener("change", () => void this.loadScenarios());
    refs.splitSelect.addEventListener("change", () => void this.loadScenarios());
    refs.predictButton.addEventListener("click", () => void this.predict());
    refs.runButton.addEventListener("click", () => void this.execute());
  }

  private fail(err: unknown): void {
    const banner =
      err instanceof ApiError ? errorBanner(err.code, err.message) : errorBanner("error", String(err));
    this.refs.errors.replaceChildren(banner);
  }

  private clearError(): void {
    this.refs.errors.replaceChildren();
  }

  async start(): Promise<void> {
    const { datasets } = await this.client.listDatasets();
    this.refs.datasetSelect.replaceChildren(
      ...datasets.map((id) => {
        const option = document.createElement("option");
        option.value = id;
        option.textContent = id;
        return option;
      }),
    );
    if (datasets.length) await this.loadScenarios();
  }

  get datasetId(): string {
    return this.refs.datasetSelect.value;
  }

  async loadScenarios(): Promise<void> {
    this.clearError();
    try {
      const split = this.refs.splitSelect.value || undefined;
      const scenarios = await this.client.listScenarios(this.datasetId, split);
      const list = document.createElement("ul");
      list.className = "scenario-list";
      for (const scenario of scenarios) {
        list.appendChild(scenarioListItem(scenario, (s) => void this.selectScenario(s)));
      }
      this.refs.scenarioList.replaceChildren(list);
    } catch (err) {
      this.fail(err);
    }
  }

  async selectScenario(scenario: ScenarioSummary): Promise<void> {
    this.clearError();
    try {
      this.scenario = scenario;
      this.refs.reportBox.value = scenario.report_text;
      this.session = await this.client.createSession({
        dataset_id: this.datasetId,
        scenario_id: scenario.id,
        report_text: scenario.report_text,
      });
      this.refs.sessionPanel.replaceChildren(sessionTimeline(this.session));
      this.refs.predictions.replaceChildren();
      this.refs.results.replaceChildren();
    } catch (err) {
      this.fail(err);
    }
  }

  async predict(): Promise<void> {
    if (!this.scenario) return;
    this.clearError();
    try {
      const body: Parameters<Client["predict"]>[0] = {
        model_id: this.refs.modelInput.value.trim(),
        dataset_id: this.datasetId,
        scenario_id: this.scenario.id,
        k: 5,
      };
      const edited = this.refs.reportBox.value.trim();
      if (edited && edited !== this.scenario.report_text) {
        body.report_text = edited; // free-text report against the chosen logs
      }
      const response = await this.client.predict(body);
      this.lastPredictions = response.queries;
      renderPredictions(this.refs.predictions, response.queries, (q) => {
        this.refs.console.value = q.text; // picking a card pre-fills the console
      });
      if (this.session) {
        this.session = await this.client.patchSession(this.session.session_id, {
          predictions: response.queries,
        });
        this.refs.sessionPanel.replaceChildren(this.sessionView());
      }
    } catch (err) {
      this.fail(err);
    }
  }

  async execute(): Promise<void> {
    if (!this.scenario) return;
    this.clearError();
    const query = this.refs.console.value.trim();
    if (!query) return;
    try {
      const result = await this.client.execute({
        dataset_id: this.datasetId,
        scenario_id: this.scenario.id,
        query,
      });
      this.refs.results.replaceChildren(resultTable(result));
      if (this.session) {
        this.session = await this.client.patchSession(this.session.session_id, { executed_query: query });
        this.refs.sessionPanel.replaceChildren(this.sessionView());
      }
    } catch (err) {
      this.fail(err);
    }
  }

  async markVerdict(index: number): Promise<void> {
    if (!this.session) return;
    this.session = await this.client.patchSession(this.session.session_id, { verdict_index: index });
    this.refs.sessionPanel.replaceChildren(this.sessionView());
  }

  private sessionView(): HTMLElement {
    const view = sessionTimeline(this.session as SessionBody);
    if (this.lastPredictions.length) {
      const row = document.createElement("div");
      row.className = "verdict-row";
      for (const query of this.lastPredictions) {
        const button = document.createElement("button");
        button.className = "verdict-button";
        button.textContent = `#${query.rank} found it`;
        button.addEventListener("click", () => void this.markVerdict(query.rank - 1));
        row.appendChild(button);
      }
      view.appendChild(row);
    }
    return view;
  }
}

export function mount(root: Document = document, base = ""): Workbench {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  const workbench = new Workbench(new Client(base), {
    datasetSelect: byId<HTMLSelectElement>("dataset-select"),
    splitSelect: byId<HTMLSelectElement>("split-select"),
    scenarioList: byId("scenario-list"),
    modelInput: byId<HTMLInputElement>("model-input"),
    reportBox: byId<HTMLTextAreaElement>("report-box"),
    predictButton: byId<HTMLButtonElement>("predict-button"),
    predictions: byId("predictions"),
    console: byId<HTMLTextAreaElement>("query-console"),
    runButton: byId<HTMLButtonElement>("run-button"),
    results: byId("results"),
    sessionPanel: byId("session-panel"),
    errors: byId("errors"),
  });
  return workbench;
}

declare global {
  interface Window {
    queryscout?: Workbench;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("dataset-select")) {
  const workbench = mount();
  window.queryscout = workbench;
  void workbench.start();
}
