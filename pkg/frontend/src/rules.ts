/** Client-side mirrors of the service's legality rules.
 *
 * The UI uses these only to decide what to offer (e.g. greying out the warm
 * priming mode before the service would reject it); the service remains the
 * authority and its verdicts are surfaced verbatim when they arrive.
 */

import { designation, type FidelityJson, type ScatterDimension, type ScatterHull, type SprintSummary } from "./types.js";

const FIDELITY_FIELDS = [
  "train_fraction_denominator",
  "val_fraction_denominator",
  "max_epochs",
  "scheduler_enabled",
  "early_stop",
  "calibration_epochs",
] as const;

/** Two sprints share a fidelity only when every field matches — the subset
 * denominators and epoch cap of the T/V/M badge, plus the scheduler flag,
 * early-stop mode and calibration epochs. */
export function fidelityEquals(a: FidelityJson, b: FidelityJson): boolean {
  return FIDELITY_FIELDS.every((field) => a[field] === b[field]);
}

export type PrimingReason = "thread-isolation" | "fidelity-mismatch" | "init-mismatch";

export interface PrimingCheckInput {
  mode: "warm" | "cold";
  targetThreadId: string;
  sourceThreadId: string;
  targetFidelity: FidelityJson;
  sourceFidelity: FidelityJson;
  targetCheckpoint: number[];
  sourceCheckpoint: number[];
  overrideInitMismatch?: boolean;
}

/** First violation a priming request would trip, in the service's order of
 * checks: thread isolation, then (warm only) fidelity identity, then the
 * init-checkpoint match unless overridden. Null means the request is legal. */
export function primingViolation(input: PrimingCheckInput): PrimingReason | null {
  if (input.targetThreadId !== input.sourceThreadId) return "thread-isolation";
  if (input.mode === "warm" && !fidelityEquals(input.targetFidelity, input.sourceFidelity)) {
    return "fidelity-mismatch";
  }
  const checkpointsMatch =
    input.targetCheckpoint.length === input.sourceCheckpoint.length &&
    input.targetCheckpoint.every((v, i) => v === input.sourceCheckpoint[i]);
  if (!checkpointsMatch && !input.overrideInitMismatch) return "init-mismatch";
  return null;
}

function checkInput(
  mode: "warm" | "cold",
  target: SprintSummary,
  source: SprintSummary,
  overrideInitMismatch = false,
): PrimingCheckInput {
  return {
    mode,
    targetThreadId: target.thread_id,
    sourceThreadId: source.thread_id,
    targetFidelity: target.fidelity,
    sourceFidelity: source.fidelity,
    targetCheckpoint: target.init_checkpoint,
    sourceCheckpoint: source.init_checkpoint,
    overrideInitMismatch,
  };
}

/** True exactly when a warm-prime request from `source` into `target` would
 * come back 422 with reason "fidelity-mismatch" — the condition under which
 * the warm mode control is disabled. Other violations (wrong thread, init
 * mismatch) are handled by not offering the source / the override checkbox,
 * not by greying the mode. */
export function warmPrimeDisabled(target: SprintSummary, source: SprintSummary): boolean {
  return primingViolation(checkInput("warm", target, source)) === "fidelity-mismatch";
}

/** Reason a priming request would be rejected, for any mode. */
export function primeViolationFor(
  mode: "warm" | "cold",
  target: SprintSummary,
  source: SprintSummary,
  overrideInitMismatch = false,
): PrimingReason | null {
  return primingViolation(checkInput(mode, target, source, overrideInitMismatch));
}

/** Tooltip for a disabled warm control, echoing the rule the service
 * enforces. */
export function warmPrimeTooltip(target: SprintSummary, source: SprintSummary): string {
  return (
    `warm priming requires identical fidelity: ` +
    `${designation(target.fidelity)} != ${designation(source.fidelity)}`
  );
}

/** Fraction of the dimension's span (log-space for log dimensions) within
 * which a hull edge counts as hugging the bound. */
export const CROWDING_TOLERANCE = 0.02;

/** Flags a dimension whose top-k hull hugs one of the current bounds,
 * suggesting the range should widen rather than shrink. Categorical
 * dimensions and missing hulls never crowd. */
export function boundaryCrowding(
  dim: ScatterDimension,
  hull: ScatterHull | null,
  tolerance: number = CROWDING_TOLERANCE,
): "low" | "high" | null {
  if (!hull || !("low" in hull)) return null;
  if (dim.low === null || dim.high === null || dim.high <= dim.low) return null;
  const t = dim.kind === "log_uniform" ? Math.log : (x: number) => x;
  const span = t(dim.high) - t(dim.low);
  if (!(span > 0)) return null;
  const lowGap = (t(hull.low) - t(dim.low)) / span;
  const highGap = (t(dim.high) - t(hull.high)) / span;
  if (lowGap <= tolerance && highGap <= tolerance) return lowGap <= highGap ? "low" : "high";
  if (lowGap <= tolerance) return "low";
  if (highGap <= tolerance) return "high";
  return null;
}

/** Lineage links shown as arrows in the sprint table. */
export interface Lineage {
  /** Parent version of the space this sprint ran on, when the space was
   * derived by pruning (null for version-0 spaces). */
  spaceParent: number | null;
  /** Sprints this one imported trials from, in first-seen order. */
  primedFrom: string[];
}

export function lineageOf(
  sprint: SprintSummary,
  spaceParent: number | null,
  trialProvenances: Array<{ kind: string; source_sprint: string | null }>,
): Lineage {
  const primedFrom: string[] = [];
  for (const p of trialProvenances) {
    if (p.kind === "fresh" || p.source_sprint === null) continue;
    if (!primedFrom.includes(p.source_sprint)) primedFrom.push(p.source_sprint);
  }
  return { spaceParent, primedFrom };
}
