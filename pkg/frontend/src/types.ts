// API payload shapes, mirroring the service's JSON bodies.

export interface ScenarioSummary {
  id: string;
  split: string;
  category: string;
  location: string;
  report_text: string;
  choices: Record<string, boolean>;
  ground_truth_query?: string | null;
}

export interface PredictedQuery {
  rank: number;
  text: string;
  probability: number;
  dialect: string;
  template: string;
}

export interface PredictResponse {
  model_id: string;
  scenario_id: string | null;
  k: number;
  queries: PredictedQuery[];
}

export interface ExecuteResponse {
  columns: string[];
  rows: Array<Array<string | number | boolean | null>>;
  query: string;
  scenario_id: string;
}

export interface ExecutedQuery {
  query: string;
  timestamp: number;
}

export interface SessionBody {
  session_id: string;
  dataset_id: string;
  scenario_id: string;
  report_text?: string | null;
  predictions: PredictedQuery[];
  executed: ExecutedQuery[];
  verdict_index: number | null;
  created_at: number;
  updated_at: number;
}

export interface ModelStatus {
  model_id: string;
  status: string;
  dataset_id: string;
  metrics?: Record<string, unknown> | null;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
