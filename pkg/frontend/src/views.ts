// Pure DOM builders. Each takes data and returns an element; no fetches,
// so everything here is unit-testable against a fake document.

import type { ExecuteResponse, PredictedQuery, ScenarioSummary, SessionBody } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function formatProbability(p: number): string {
  return p >= 0.0001 ? p.toFixed(4) : p.toExponential(2);
}

export function scenarioListItem(scenario: ScenarioSummary, onSelect: (s: ScenarioSummary) => void): HTMLElement {
  const item = el("li", "scenario-item");
  item.dataset.scenarioId = scenario.id;
  const head = el("div", "scenario-head");
  head.appendChild(el("span", "scenario-id", scenario.id));
  head.appendChild(el("span", `badge split-${scenario.split}`, scenario.split));
  head.appendChild(el("span", "scenario-cat", `${scenario.category} @ ${scenario.location}`));
  item.appendChild(head);
  item.appendChild(el("p", "scenario-report", scenario.report_text));
  const flags = Object.entries(scenario.choices)
    .filter(([, v]) => v)
    .map(([k]) => k);
  if (flags.length) {
    const row = el("div", "choice-row");
    for (const flag of flags) row.appendChild(el("span", "badge choice", flag));
    item.appendChild(row);
  }
  item.addEventListener("click", () => onSelect(scenario));
  return item;
}

export function predictionCard(query: PredictedQuery, onPick: (q: PredictedQuery) => void): HTMLElement {
  const card = el("div", "prediction-card");
  card.dataset.rank = String(query.rank);
  const head = el("div", "prediction-head");
  head.appendChild(el("span", "badge rank", `#${query.rank}`));
  head.appendChild(el("span", `badge dialect dialect-${query.dialect}`, query.dialect));
  head.appendChild(el("span", "probability", `p=${formatProbability(query.probability)}`));
  card.appendChild(head);
  const text = el("code", "query-text", query.text);
  card.appendChild(text);
  card.addEventListener("click", () => onPick(query));
  return card;
}

export function renderPredictions(
  container: HTMLElement,
  queries: PredictedQuery[],
  onPick: (q: PredictedQuery) => void,
): void {
  container.replaceChildren();
  if (!queries.length) {
    container.appendChild(el("p", "empty", "No predictions."));
    return;
  }
  for (const query of queries) container.appendChild(predictionCard(query, onPick));
}

export function resultTable(result: ExecuteResponse, maxRows = 200): HTMLElement {
  const wrap = el("div", "result-wrap");
  const table = el("table", "result-table");
  const thead = el("thead");
  const headRow = el("tr");
  for (const column of result.columns) headRow.appendChild(el("th", undefined, column));
  thead.appendChild(headRow);
  table.appendChild(thead);
  const tbody = el("tbody");
  for (const row of result.rows.slice(0, maxRows)) {
    const tr = el("tr");
    for (const cell of row) tr.appendChild(el("td", undefined, cell === null ? "" : String(cell)));
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  wrap.appendChild(table);
  const note = result.rows.length > maxRows ? ` (showing first ${maxRows})` : "";
  wrap.appendChild(el("p", "row-count", `${result.rows.length} rows${note}`));
  return wrap;
}

export function sessionTimeline(session: SessionBody): HTMLElement {
  const wrap = el("div", "session-timeline");
  wrap.appendChild(el("h3", undefined, `Session ${session.session_id}`));
  const list = el("ol", "timeline");
  for (const executed of session.executed) {
    const item = el("li", "timeline-exec");
    item.appendChild(el("code", undefined, executed.query));
    list.appendChild(item);
  }
  wrap.appendChild(list);
  const verdict =
    session.verdict_index === null
      ? "no verdict yet"
      : `root cause found by prediction #${session.verdict_index + 1}`;
  wrap.appendChild(el("p", "verdict", verdict));
  return wrap;
}

export function errorBanner(code: string, message: string): HTMLElement {
  return el("div", "error-banner", `${code}: ${message}`);
}
