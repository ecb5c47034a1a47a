/** The reviewer's pruning decision under construction.
 *
 * A draft collects everything a human edits between sprints: the k used for
 * the hull overlays, brush selections per dimension, freezes, and optional
 * margin overrides. Only k, freezes and margins travel to POST /prune — the
 * service computes the pruned ranges itself from the top-k hull, and the UI
 * never reimplements that arithmetic. Brush selections stay client-side:
 * they record the exact value ranges (or category subsets) the reviewer
 * marked while inspecting scatters, drive linked highlighting, and are the
 * natural staging area for choosing freeze values.
 *
 * Serialization is the submission contract: `toBody()` is exactly the JSON
 * that goes on the wire, and `parseBody` inverts it (`toBody(parseBody(b))`
 * reproduces `b`).
 */

import type { FreezeItemBody, HPValue, MarginOverrides, PruneBody } from "./types.js";

export type Proposal =
  | { type: "range"; low: number; high: number }
  | { type: "categories"; categories: string[] }
  | { type: "freeze"; value: HPValue | null };

export class PruneDraft {
  readonly sprintId: string;
  private kValue: number;
  private marginOverrides: MarginOverrides | undefined;
  private readonly proposals = new Map<string, Proposal>();

  constructor(sprintId: string, k = 10) {
    this.sprintId = sprintId;
    this.kValue = k;
  }

  get k(): number {
    return this.kValue;
  }

  setK(k: number): void {
    if (!Number.isInteger(k) || k < 1) throw new RangeError(`k must be a positive integer, got ${k}`);
    this.kValue = k;
  }

  get margins(): MarginOverrides | undefined {
    return this.marginOverrides;
  }

  setMargins(margins: MarginOverrides | undefined): void {
    this.marginOverrides = margins;
  }

  /** Record a brush selection verbatim — no snapping, rounding or clamping;
   * the draft holds exactly the values the gesture produced. */
  brushRange(dim: string, low: number, high: number): void {
    if (!(low <= high)) throw new RangeError(`empty brush range [${low}, ${high}] on ${dim}`);
    this.proposals.set(dim, { type: "range", low, high });
  }

  /** Toggle one category in a categorical dimension's subset selection.
   * The subset keeps `allCategories` order regardless of click order. */
  toggleCategory(dim: string, category: string, allCategories: readonly string[]): void {
    const existing = this.proposals.get(dim);
    const current = existing?.type === "categories" ? new Set(existing.categories) : new Set<string>();
    if (current.has(category)) current.delete(category);
    else current.add(category);
    if (current.size === 0) this.proposals.delete(dim);
    else {
      this.proposals.set(dim, {
        type: "categories",
        categories: allCategories.filter((c) => current.has(c)),
      });
    }
  }

  /** Freeze a dimension at a value; null delegates the choice of value (the
   * dimension midpoint) to the service. */
  freeze(dim: string, value: HPValue | null): void {
    this.proposals.set(dim, { type: "freeze", value });
  }

  clear(dim: string): void {
    this.proposals.delete(dim);
  }

  proposal(dim: string): Proposal | undefined {
    return this.proposals.get(dim);
  }

  dimensions(): string[] {
    return [...this.proposals.keys()];
  }

  freezes(): FreezeItemBody[] {
    const out: FreezeItemBody[] = [];
    for (const [dim, p] of this.proposals) {
      if (p.type === "freeze") out.push({ dim, value: p.value });
    }
    return out;
  }

  /** The POST /prune body, exactly as submitted. */
  toBody(): PruneBody {
    const body: PruneBody = { k: this.kValue, freezes: this.freezes() };
    if (this.marginOverrides !== undefined) body.margins = this.marginOverrides;
    return body;
  }

  /** Rebuild a draft from a wire body; inverse of `toBody` for the
   * submission fields. */
  static parseBody(sprintId: string, body: PruneBody): PruneDraft {
    const draft = new PruneDraft(sprintId, body.k);
    for (const f of body.freezes) draft.freeze(f.dim, f.value);
    if (body.margins !== undefined) draft.setMargins(body.margins);
    return draft;
  }
}
