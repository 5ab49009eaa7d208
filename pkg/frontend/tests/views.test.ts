// @vitest-environment happy-dom
import { describe, expect, it, vi } from "vitest";

import { formatProbability, predictionCard, renderPredictions, resultTable, scenarioListItem, sessionTimeline } from "../src/views.js";
import type { ExecuteResponse, PredictedQuery, ScenarioSummary, SessionBody } from "../src/types.js";

const QUERY: PredictedQuery = {
  rank: 1,
  text: 'SELECT span FROM spans WHERE name="GET_cart"',
  probability: 0.4321,
  dialect: "trace",
  template: "SELECT span FROM spans WHERE name=_",
};

const SCENARIO: ScenarioSummary = {
  id: "s0007",
  split: "test_repeat",
  category: "component_failure",
  location: "cart",
  report_text: "the page is empty",
  choices: { missing_content: true, slow_load: false, error_page: false, crash: false },
};

describe("formatProbability", () => {
  it("renders four decimals for ordinary values", () => {
    expect(formatProbability(0.4321)).toBe("0.4321");
  });
  it("falls back to scientific for tiny values", () => {
    expect(formatProbability(1e-7)).toBe("1.00e-7");
  });
});

describe("predictionCard", () => {
  it("shows rank, dialect badge and probability to displayed precision", () => {
    const card = predictionCard(QUERY, () => {});
    expect(card.querySelector(".badge.rank")?.textContent).toBe("#1");
    expect(card.querySelector(".badge.dialect")?.textContent).toBe("trace");
    expect(card.querySelector(".probability")?.textContent).toBe("p=0.4321");
    expect(card.querySelector(".query-text")?.textContent).toBe(QUERY.text);
  });

  it("invokes the pick handler with the query", () => {
    const onPick = vi.fn();
    const card = predictionCard(QUERY, onPick);
    card.dispatchEvent(new Event("click"));
    expect(onPick).toHaveBeenCalledWith(QUERY);
  });
});

describe("renderPredictions", () => {
  it("keeps API order and contiguous rank badges", () => {
    const container = document.createElement("div");
    const queries = [QUERY, { ...QUERY, rank: 2, probability: 0.2 }, { ...QUERY, rank: 3, probability: 0.1 }];
    renderPredictions(container, queries, () => {});
    const ranks = [...container.querySelectorAll(".badge.rank")].map((n) => n.textContent);
    expect(ranks).toEqual(["#1", "#2", "#3"]);
    const probs = [...container.querySelectorAll(".probability")].map((n) => n.textContent);
    expect(probs).toEqual(["p=0.4321", "p=0.2000", "p=0.1000"]);
  });

  it("renders a placeholder for an empty list", () => {
    const container = document.createElement("div");
    renderPredictions(container, [], () => {});
    expect(container.querySelector(".empty")).not.toBeNull();
  });
});

describe("scenarioListItem", () => {
  it("shows id, split badge and set choices only", () => {
    const item = scenarioListItem(SCENARIO, () => {});
    expect(item.querySelector(".scenario-id")?.textContent).toBe("s0007");
    expect(item.querySelector(".badge")?.textContent).toBe("test_repeat");
    const choices = [...item.querySelectorAll(".badge.choice")].map((n) => n.textContent);
    expect(choices).toEqual(["missing_content"]);
  });
});

describe("resultTable", () => {
  it("renders rectangular rows with a count", () => {
    const result: ExecuteResponse = {
      columns: ["host", "time", "value"],
      rows: [
        ["mn.h1", 0, 0.5],
        ["mn.h1", 1, 0.6],
      ],
      query: "SELECT * FROM cpu_usage",
      scenario_id: "s0001",
    };
    const node = resultTable(result);
    expect([...node.querySelectorAll("th")].map((n) => n.textContent)).toEqual(result.columns);
    expect(node.querySelectorAll("tbody tr").length).toBe(2);
    expect(node.querySelector(".row-count")?.textContent).toContain("2 rows");
  });
});

describe("sessionTimeline", () => {
  it("lists executed queries and the verdict", () => {
    const session: SessionBody = {
      session_id: "sess0001",
      dataset_id: "ds0001",
      scenario_id: "s0001",
      predictions: [],
      executed: [{ query: "SELECT span FROM spans", timestamp: 1 }],
      verdict_index: 0,
      created_at: 0,
      updated_at: 1,
    };
    const node = sessionTimeline(session);
    expect(node.querySelectorAll(".timeline-exec").length).toBe(1);
    expect(node.querySelector(".verdict")?.textContent).toContain("#1");
  });
});
