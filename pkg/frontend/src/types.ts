/** JSON shapes exchanged with the sprint service.
 *
 * These mirror the HTTP contract exactly; the UI never derives or repairs
 * fields the service owns. `frozen` means different things in different
 * payloads: a scatter dimension reports a boolean flag, a search-space
 * dimension reports the frozen value itself (or null when unfrozen).
 */

export interface FidelityJson {
  train_fraction_denominator: number;
  val_fraction_denominator: number;
  max_epochs: number;
  scheduler_enabled: boolean;
  early_stop: "none" | "end_of_warmup";
  calibration_epochs: number;
}

/** Render the compact T{kT}_V{kV}_M{E} badge for a fidelity. */
export function designation(f: FidelityJson): string {
  return `T${f.train_fraction_denominator}_V${f.val_fraction_denominator}_M${f.max_epochs}`;
}

export interface ThreadJson {
  id: string;
  name: string;
  model_type: string;
  variant: string;
  grouping: string;
  model_config_id: string;
  objective: string;
  objective_seed: number;
  noise_sd: number;
  sprint_ids: string[];
  space_versions: number[];
  current_space_version: number;
}

export interface HyperbandJson {
  max_resource: number;
  eta: number;
  s_max: number;
  budget: number;
}

export interface TpeJson {
  gamma: number;
  n_candidates: number;
  n_startup: number;
}

export type SprintStatus = "pending" | "running" | "complete" | "failed" | "interrupted";

/** GET /sprints/{id} and entries of GET /threads/{id}/sprints. */
export interface SprintSummary {
  id: string;
  thread_id: string;
  name: string;
  sampler: string;
  pruner: string;
  space_version: number;
  fidelity: FidelityJson;
  init_checkpoint: number[];
  n_calls: number;
  n_random: number;
  seed: number;
  status: SprintStatus;
  hyperband: HyperbandJson | null;
  tpe: TpeJson | null;
  n_imported: number;
  best_trial_id: number | null;
  n_trials: number;
  n_complete: number;
  n_pruned: number;
  n_failed: number;
}

export type HPValue = number | string;

export interface ProvenanceJson {
  kind: "fresh" | "warm_primed" | "cold_primed";
  source_sprint: string | null;
  source_trial: number | null;
}

export interface RungRecordJson {
  resource: number;
  score: number;
  prunable: boolean;
}

export interface TrialJson {
  id: number;
  point: Record<string, HPValue>;
  status: "pending" | "running" | "complete" | "pruned" | "failed";
  final_score: number | null;
  intermediate: RungRecordJson[];
  provenance: ProvenanceJson;
  seed: number;
}

/** GET /sprints/{id}/trials. */
export interface TrialPage {
  total: number;
  offset: number;
  trials: TrialJson[];
}

export type DimensionKind = "uniform" | "log_uniform" | "integer" | "categorical";

/** Entry of SpaceJson.dimensions; `frozen` carries the frozen value. */
export interface SpaceDimensionJson {
  name: string;
  kind: DimensionKind;
  low: number | null;
  high: number | null;
  categories: string[] | null;
  frozen: HPValue | null;
}

/** GET /threads/{id}/space, GET /sprints/{id}/space, POST /sprints/{id}/prune. */
export interface SpaceJson {
  name: string;
  version: number;
  parent: number | null;
  dimensions: SpaceDimensionJson[];
}

/** Dimension header of a scatter payload; `frozen` is a boolean flag. */
export interface ScatterDimension {
  name: string;
  kind: DimensionKind;
  low: number | null;
  high: number | null;
  categories: string[] | null;
  frozen: boolean;
}

export interface ScatterPoint {
  trial_id: number;
  value: HPValue | null;
  score: number;
  provenance: ProvenanceJson["kind"];
}

/** Top-k hull as the service computed it: a closed value range for numeric
 * dimensions, a category subset for categorical ones. */
export type ScatterHull = { low: number; high: number } | { categories: string[] };

export interface ScatterRange {
  low: number | null;
  high: number | null;
  categories: string[] | null;
  frozen: boolean;
}

/** GET /sprints/{id}/dimensions/{name}/scatter?k=. */
export interface ScatterPayload {
  dimension: ScatterDimension;
  points: ScatterPoint[];
  hull: ScatterHull | null;
  current: ScatterRange | null;
}

// --- request bodies ----------------------------------------------------------

export interface ThreadBody {
  name: string;
  grouping?: string;
  model_type?: string;
  variant?: string;
  objective?: string;
  objective_seed?: number;
  noise_sd?: number;
  with_warmup?: boolean;
}

export interface PrimingSpecBody {
  mode: "warm" | "cold";
  source: string;
  top_n?: number;
  override_init_mismatch?: boolean;
}

export interface SprintBody {
  thread_id: string;
  sampler?: string;
  pruner?: string;
  fidelity?: string | Partial<FidelityJson>;
  space_version?: number | null;
  n_calls?: number;
  n_random?: number;
  seed?: number;
  init_checkpoint?: [number, number];
  suffix?: string;
  priming?: PrimingSpecBody | null;
}

export interface PrimeBody {
  source: string;
  mode: "warm" | "cold";
  top_n?: number;
  override_init_mismatch?: boolean;
}

export interface FreezeItemBody {
  dim: string;
  /** null asks the service to freeze at the dimension midpoint. */
  value: HPValue | null;
}

export interface MarginOverrides {
  log_factor?: number;
  uniform_delta?: number;
  integer_pad?: number;
}

/** POST /sprints/{id}/prune. */
export interface PruneBody {
  k: number;
  freezes: FreezeItemBody[];
  margins?: MarginOverrides;
}

export interface RunBody {
  worker_limit?: number;
  wait?: boolean;
}

export interface RunAccepted {
  status: "started";
  sprint_id: string;
}

export interface PrimeResult {
  mode: "warm" | "cold";
  imported: number;
}

/** Error envelope: HTTP errors carry {"detail": {"reason", "message"}}. */
export interface ErrorDetail {
  reason: string;
  message: string;
}
