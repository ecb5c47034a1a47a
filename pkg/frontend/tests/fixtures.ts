/** Shared contract fixtures and fetch stubs for the unit suites. */

import type { FetchLike } from "../src/api.js";
import type {
  FidelityJson,
  ScatterPayload,
  SprintSummary,
  ThreadJson,
} from "../src/types.js";

export function fidelity(overrides: Partial<FidelityJson> = {}): FidelityJson {
  return {
    train_fraction_denominator: 6,
    val_fraction_denominator: 3,
    max_epochs: 25,
    scheduler_enabled: false,
    early_stop: "none",
    calibration_epochs: 0,
    ...overrides,
  };
}

export function sprintSummary(overrides: Partial<SprintSummary> = {}): SprintSummary {
  return {
    id: "sp0001",
    thread_id: "th001",
    name: "Sim.Toy.GLOBAL.T6_V3_M25.E0_S0.v1",
    sampler: "gp",
    pruner: "none",
    space_version: 0,
    fidelity: fidelity(),
    init_checkpoint: [0, 0],
    n_calls: 12,
    n_random: 12,
    seed: 0,
    status: "complete",
    hyperband: null,
    tpe: null,
    n_imported: 0,
    best_trial_id: 4,
    n_trials: 12,
    n_complete: 12,
    n_pruned: 0,
    n_failed: 0,
    ...overrides,
  };
}

export function threadJson(overrides: Partial<ThreadJson> = {}): ThreadJson {
  return {
    id: "th001",
    name: "demo",
    model_type: "Sim",
    variant: "Toy",
    grouping: "GLOBAL",
    model_config_id: "Sim.Toy.GLOBAL",
    objective: "multitask_sim",
    objective_seed: 0,
    noise_sd: 0,
    sprint_ids: ["sp0001"],
    space_versions: [0],
    current_space_version: 0,
    ...overrides,
  };
}

export function numericScatter(overrides: Partial<ScatterPayload> = {}): ScatterPayload {
  return {
    dimension: {
      name: "lr",
      kind: "log_uniform",
      low: 1e-6,
      high: 1e-1,
      categories: null,
      frozen: false,
    },
    points: [
      { trial_id: 0, value: 3.2e-4, score: 0.41, provenance: "fresh" },
      { trial_id: 1, value: 1.2e-5, score: 0.77, provenance: "fresh" },
      { trial_id: 2, value: 8.9e-3, score: 0.29, provenance: "fresh" },
      { trial_id: 3, value: 5.5e-4, score: 0.33, provenance: "warm_primed" },
      { trial_id: 4, value: 2.1e-3, score: 0.18, provenance: "fresh" },
      { trial_id: 5, value: 6.6e-2, score: 0.92, provenance: "fresh" },
    ],
    hull: { low: 5.5e-4, high: 8.9e-3 },
    current: { low: 1e-6, high: 1e-1, categories: null, frozen: false },
    ...overrides,
  };
}

export function categoricalScatter(overrides: Partial<ScatterPayload> = {}): ScatterPayload {
  return {
    dimension: {
      name: "head",
      kind: "categorical",
      low: null,
      high: null,
      categories: ["h00", "h01", "h02", "h03"],
      frozen: false,
    },
    points: [
      { trial_id: 0, value: "h01", score: 0.4, provenance: "fresh" },
      { trial_id: 1, value: "h03", score: 0.2, provenance: "fresh" },
      { trial_id: 2, value: "h01", score: 0.6, provenance: "fresh" },
    ],
    hull: { categories: ["h01", "h03"] },
    current: { low: null, high: null, categories: ["h00", "h01", "h02", "h03"], frozen: false },
    ...overrides,
  };
}

export interface RecordedRequest {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

/** Minimal stand-in for a fetch Response; the client only reads ok/status/
 * statusText/json(). */
export function jsonResponse(data: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: status === 200 ? "OK" : `HTTP ${status}`,
    json: async () => data,
  } as unknown as Response;
}

export function textResponse(text: string, status: number): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: `HTTP ${status}`,
    json: async () => JSON.parse(text) as unknown,
  } as unknown as Response;
}

/** Fetch stub that records every request and answers from a handler. */
export function recordingFetch(
  handler: (url: string, init?: RequestInit) => Response | Promise<Response>,
): { fetch: FetchLike; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    requests.push({
      url,
      method: init?.method ?? "GET",
      headers: (init?.headers as Record<string, string>) ?? {},
      body: typeof init?.body === "string" ? (JSON.parse(init.body) as unknown) : undefined,
    });
    return handler(url, init);
  };
  return { fetch: fetchImpl, requests };
}
