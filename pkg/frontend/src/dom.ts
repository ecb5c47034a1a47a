/** DOM rendering layer.
 *
 * Thin on purpose: every decision that matters (what a brush means, when
 * warm priming is offered, what goes in a POST body) lives in the pure
 * modules; these functions only project that state into elements and route
 * events back into it.
 */

import { ApiError, type SprintOptClient } from "./api.js";
import type { PruneDraft } from "./draft.js";
import {
  boundaryCrowding,
  lineageOf,
  primeViolationFor,
  warmPrimeDisabled,
  warmPrimeTooltip,
} from "./rules.js";
import { brushToRange, buildScatterModel, DEFAULT_BOX, type PlotBox, type ScatterViewModel } from "./scatter.js";
import { designation, type FidelityJson, type ScatterPayload, type SprintSummary, type ThreadJson } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

type Attrs = Record<string, string | number | boolean | ((ev: Event) => void)>;

function assign(node: Element, attrs: Attrs): void {
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key.replace(/^on/, ""), value as EventListener);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, String(value));
    }
  }
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  assign(node, attrs);
  node.append(...children);
  return node;
}

function svg(tag: string, attrs: Attrs = {}, ...children: Array<Node | string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag) as SVGElement;
  assign(node, attrs);
  node.append(...children);
  return node;
}

export function errorText(err: unknown): string {
  if (err instanceof ApiError) return `${err.reason}: ${err.detailMessage}`;
  return err instanceof Error ? err.message : String(err);
}

export function renderErrorBanner(err: unknown): HTMLElement {
  return el("div", { class: "error-banner", role: "alert" }, errorText(err));
}

// --- thread & sprint lists -----------------------------------------------------

export function renderThreadList(
  threads: ThreadJson[],
  selectedId: string | null,
  onSelect: (thread: ThreadJson) => void,
): HTMLElement {
  const items = threads.map((t) =>
    el(
      "li",
      { class: t.id === selectedId ? "thread selected" : "thread" },
      el(
        "button",
        { class: "thread-button", onclick: () => onSelect(t) },
        el("span", { class: "thread-id" }, t.id),
        " ",
        el("span", { class: "thread-name" }, t.name),
        el("span", { class: "thread-space" }, ` space v${t.current_space_version}`),
      ),
    ),
  );
  return el("ul", { class: "thread-list" }, ...items);
}

export interface SprintRowData {
  sprint: SprintSummary;
  spaceParent: number | null;
  trialProvenances: Array<{ kind: string; source_sprint: string | null }>;
}

export function renderSprintTable(
  rows: SprintRowData[],
  selectedId: string | null,
  onSelect: (sprint: SprintSummary) => void,
): HTMLElement {
  const header = el(
    "tr",
    {},
    ...["sprint", "status", "fidelity", "sampler", "trials", "best", "lineage"].map((h) => el("th", {}, h)),
  );
  const body = rows.map(({ sprint, spaceParent, trialProvenances }) => {
    const lineage = lineageOf(sprint, spaceParent, trialProvenances);
    const arrows: string[] = [];
    if (lineage.spaceParent !== null) {
      arrows.push(`space v${lineage.spaceParent} → v${sprint.space_version}`);
    }
    for (const src of lineage.primedFrom) arrows.push(`${src} → primed`);
    return el(
      "tr",
      {
        class: sprint.id === selectedId ? "sprint-row selected" : "sprint-row",
        onclick: () => onSelect(sprint),
      },
      el("td", { class: "sprint-id" }, sprint.id),
      el("td", { class: `status status-${sprint.status}` }, sprint.status),
      el("td", {}, el("span", { class: "fidelity-badge" }, designation(sprint.fidelity))),
      el("td", {}, sprint.pruner === "none" ? sprint.sampler : `${sprint.sampler}+${sprint.pruner}`),
      el("td", {}, `${sprint.n_complete}/${sprint.n_calls}`),
      el("td", {}, sprint.best_trial_id === null ? "—" : `#${sprint.best_trial_id}`),
      el("td", { class: "lineage" }, arrows.join(", ") || "—"),
    );
  });
  return el("table", { class: "sprint-table" }, el("thead", {}, header), el("tbody", {}, ...body));
}

// --- scatter panel ---------------------------------------------------------------

export interface ScatterPanelOptions {
  box?: PlotBox;
  onDraftChange?: () => void;
}

/** One dimension's scatter with hull band, current-range shading, brush
 * gesture, crowding flag and freeze input. The brush writes the exact data
 * values of the gesture into the draft. */
export function renderScatterPanel(
  payload: ScatterPayload,
  draft: PruneDraft,
  opts: ScatterPanelOptions = {},
): HTMLElement {
  const box = opts.box ?? DEFAULT_BOX;
  const model = buildScatterModel(payload, box);
  const dim = payload.dimension;
  const notify = opts.onDraftChange ?? (() => undefined);

  const plotTop = box.padTop;
  const plotBottom = box.height - box.padBottom;
  const root = svg("svg", {
    class: "scatter",
    width: box.width,
    height: box.height,
    viewBox: `0 0 ${box.width} ${box.height}`,
    "data-dimension": dim.name,
  });

  if (model.currentRect) {
    root.append(
      svg("rect", {
        class: "current-range",
        x: Math.min(model.currentRect.x0, model.currentRect.x1),
        y: plotTop,
        width: Math.abs(model.currentRect.x1 - model.currentRect.x0),
        height: plotBottom - plotTop,
      }),
    );
  }
  if (model.hullRect) {
    root.append(
      svg("rect", {
        class: "hull-band",
        "data-low": String((model.hullData as { low: number }).low),
        "data-high": String((model.hullData as { high: number }).high),
        x: Math.min(model.hullRect.x0, model.hullRect.x1),
        y: plotTop,
        width: Math.abs(model.hullRect.x1 - model.hullRect.x0),
        height: plotBottom - plotTop,
      }),
    );
  }
  if (model.axis === "categorical" && model.hullData && "categories" in model.hullData) {
    for (const c of model.hullData.categories) {
      const x = model.valueTicks.find((t) => t.label === c)?.x;
      if (x !== undefined) {
        root.append(svg("circle", { class: "hull-category", cx: x, cy: plotTop + 4, r: 3, "data-category": c }));
      }
    }
  }

  for (const tick of model.valueTicks) {
    root.append(svg("text", { class: "tick tick-x", x: tick.x, y: box.height - 8 }, tick.label));
  }
  for (const tick of model.scoreTicks) {
    root.append(svg("text", { class: "tick tick-y", x: 4, y: tick.y }, tick.label));
  }
  for (const p of model.px) {
    root.append(
      svg("circle", {
        class: `trial-point provenance-${p.provenance}`,
        cx: p.x,
        cy: p.y,
        r: 3,
        "data-trial": p.trialId,
      }),
    );
  }

  const brushRect = svg("rect", { class: "brush", y: plotTop, height: plotBottom - plotTop, x: 0, width: 0 });
  brushRect.setAttribute("display", "none");
  root.append(brushRect);

  const existing = draft.proposal(dim.name);
  if (existing?.type === "range") {
    const x0 = model.toPixelX(existing.low);
    const x1 = model.toPixelX(existing.high);
    brushRect.setAttribute("x", String(Math.min(x0, x1)));
    brushRect.setAttribute("width", String(Math.abs(x1 - x0)));
    brushRect.removeAttribute("display");
  }

  let dragStart: number | null = null;
  const localX = (ev: MouseEvent): number => {
    const rect = (root as unknown as { getBoundingClientRect(): DOMRect }).getBoundingClientRect();
    return ev.clientX - rect.left;
  };
  root.addEventListener("pointerdown", (ev) => {
    dragStart = localX(ev as MouseEvent);
  });
  root.addEventListener("pointermove", (ev) => {
    if (dragStart === null) return;
    const x = localX(ev as MouseEvent);
    brushRect.setAttribute("x", String(Math.min(dragStart, x)));
    brushRect.setAttribute("width", String(Math.abs(x - dragStart)));
    brushRect.removeAttribute("display");
  });
  root.addEventListener("pointerup", (ev) => {
    if (dragStart === null) return;
    const x = localX(ev as MouseEvent);
    const start = dragStart;
    dragStart = null;
    if (model.axis === "categorical") {
      const category = model.categoryAt(x);
      if (category && dim.categories) {
        draft.toggleCategory(dim.name, category, dim.categories);
        notify();
      }
      return;
    }
    if (Math.abs(x - start) < 3) {
      draft.clear(dim.name);
      brushRect.setAttribute("display", "none");
      notify();
      return;
    }
    const range = brushToRange(model, start, x);
    if (range) {
      draft.brushRange(dim.name, range.low, range.high);
      notify();
    }
  });

  const crowding = boundaryCrowding(dim, payload.hull);
  const header = el(
    "div",
    { class: "scatter-header" },
    el("span", { class: "dim-name" }, dim.name),
    el("span", { class: "dim-kind" }, ` ${dim.kind}`),
    crowding
      ? el(
          "span",
          {
            class: "crowding-flag",
            title: `top-k values hug the ${crowding} bound — consider widening instead of pruning`,
          },
          ` ⚠ crowds ${crowding} bound`,
        )
      : "",
  );

  const freezeInput = el("input", {
    class: "freeze-value",
    type: "text",
    placeholder: "value (empty = midpoint)",
  }) as HTMLInputElement;
  const freezeButton = el(
    "button",
    {
      class: "freeze-button",
      onclick: () => {
        const raw = freezeInput.value.trim();
        let value: number | string | null = null;
        if (raw !== "") {
          const num = Number(raw);
          value = Number.isFinite(num) && dim.kind !== "categorical" ? num : raw;
        }
        draft.freeze(dim.name, value);
        notify();
      },
    },
    "freeze",
  );

  return el("div", { class: "scatter-panel" }, header, root as unknown as HTMLElement, el("div", { class: "scatter-tools" }, freezeInput, freezeButton));
}

// --- submit panel -----------------------------------------------------------------

export interface SubmitPanelHooks {
  /** Serialized submit, e.g. SubmissionQueue.enqueue bound to the sprint. */
  submit: (body: ReturnType<PruneDraft["toBody"]>) => Promise<{ version: number }>;
  onSuccess?: (version: number) => void;
}

/** Prune submission panel: shows the exact wire body the draft serializes
 * to, submits it, and reports the new space version or the service's error
 * reason verbatim. */
export function renderSubmitPanel(draft: PruneDraft, hooks: SubmitPanelHooks): HTMLElement {
  const preview = el("pre", { class: "body-preview" }, JSON.stringify(draft.toBody(), null, 2));
  const status = el("div", { class: "submit-status" });
  const kInput = el("input", {
    class: "k-input",
    type: "number",
    min: 1,
    value: draft.k,
    onchange: () => {
      const k = Number((kInput as HTMLInputElement).value);
      if (Number.isInteger(k) && k >= 1) {
        draft.setK(k);
        preview.textContent = JSON.stringify(draft.toBody(), null, 2);
      }
    },
  }) as HTMLInputElement;

  const button = el(
    "button",
    {
      class: "submit-prune",
      onclick: () => {
        status.textContent = "submitting…";
        hooks
          .submit(draft.toBody())
          .then((space) => {
            status.textContent = `pruned → space v${space.version}`;
            hooks.onSuccess?.(space.version);
          })
          .catch((err: unknown) => {
            status.textContent = errorText(err);
            status.classList.add("submit-error");
          });
      },
    },
    "submit prune",
  );

  return el(
    "div",
    { class: "submit-panel" },
    el("label", {}, "top-k ", kInput),
    preview,
    button,
    status,
  );
}

/** Refresh a submit panel's body preview after draft edits. */
export function refreshBodyPreview(panel: HTMLElement, draft: PruneDraft): void {
  const preview = panel.querySelector(".body-preview");
  if (preview) preview.textContent = JSON.stringify(draft.toBody(), null, 2);
}

// --- follow-up sprint form ----------------------------------------------------------

/** Mirror of the service's fidelity designation parser (T{k}_V{k}[_M{e}]). */
export function parseDesignation(text: string): Pick<
  FidelityJson,
  "train_fraction_denominator" | "val_fraction_denominator" | "max_epochs"
> | null {
  const m = /^T(\d+)_V(\d+)(?:_M(\d+))?$/.exec(text.trim());
  if (!m) return null;
  return {
    train_fraction_denominator: Number(m[1]),
    val_fraction_denominator: Number(m[2]),
    max_epochs: m[3] === undefined ? 25 : Number(m[3]),
  };
}

export interface FollowUpFormHooks {
  create: (body: import("./types.js").SprintBody) => Promise<SprintSummary>;
  onCreated?: (sprint: SprintSummary) => void;
}

/** Form wrapping POST /sprints for the next sprint in a thread, with a
 * priming selector. The warm mode is disabled exactly when the service
 * would reject the pair with 422 fidelity-mismatch, with the rule shown as
 * a tooltip. */
export function renderFollowUpForm(
  thread: ThreadJson,
  sprints: SprintSummary[],
  hooks: FollowUpFormHooks,
): HTMLElement {
  const fidelityInput = el("input", { class: "fidelity-input", type: "text", value: "T1_V1_M25" }) as HTMLInputElement;
  const schedulerInput = el("input", { class: "scheduler-input", type: "checkbox", checked: true }) as HTMLInputElement;
  const earlyStopSelect = el(
    "select",
    { class: "early-stop-input" },
    el("option", { value: "none" }, "none"),
    el("option", { value: "end_of_warmup" }, "end_of_warmup"),
  ) as HTMLSelectElement;
  const calibrationInput = el("input", { class: "calibration-input", type: "number", min: 0, value: 0 }) as HTMLInputElement;
  const samplerSelect = el(
    "select",
    { class: "sampler-input" },
    el("option", { value: "gp" }, "gp"),
    el("option", { value: "tpe" }, "tpe"),
  ) as HTMLSelectElement;
  const prunerSelect = el(
    "select",
    { class: "pruner-input" },
    el("option", { value: "none" }, "none"),
    el("option", { value: "hyperband" }, "hyperband"),
  ) as HTMLSelectElement;
  const callsInput = el("input", { class: "calls-input", type: "number", min: 1, value: 30 }) as HTMLInputElement;
  const randomInput = el("input", { class: "random-input", type: "number", min: 0, value: 10 }) as HTMLInputElement;
  const seedInput = el("input", { class: "seed-input", type: "number", value: 0 }) as HTMLInputElement;
  const suffixInput = el("input", { class: "suffix-input", type: "text", value: "v1" }) as HTMLInputElement;

  const primeModeNone = el("input", { class: "prime-none", type: "radio", name: "prime-mode", value: "", checked: true }) as HTMLInputElement;
  const primeModeWarm = el("input", { class: "prime-warm", type: "radio", name: "prime-mode", value: "warm" }) as HTMLInputElement;
  const primeModeCold = el("input", { class: "prime-cold", type: "radio", name: "prime-mode", value: "cold" }) as HTMLInputElement;
  const warmLabel = el("label", { class: "prime-warm-label" }, primeModeWarm, "warm");
  const sourceSelect = el(
    "select",
    { class: "prime-source" },
    ...sprints.map((s) => el("option", { value: s.id }, `${s.id} (${designation(s.fidelity)})`)),
  ) as HTMLSelectElement;
  const topNInput = el("input", { class: "top-n-input", type: "number", min: 1, value: 3 }) as HTMLInputElement;
  const overrideInput = el("input", { class: "override-init", type: "checkbox" }) as HTMLInputElement;
  const status = el("div", { class: "create-status" });

  const formFidelity = (): FidelityJson | null => {
    const parsed = parseDesignation(fidelityInput.value);
    if (!parsed) return null;
    return {
      ...parsed,
      scheduler_enabled: schedulerInput.checked,
      early_stop: earlyStopSelect.value as FidelityJson["early_stop"],
      calibration_epochs: Number(calibrationInput.value) || 0,
    };
  };

  /** A stand-in for the sprint being created, for the legality mirror. */
  const targetCandidate = (fidelity: FidelityJson): SprintSummary => ({
    id: "(new)",
    thread_id: thread.id,
    name: "",
    sampler: samplerSelect.value,
    pruner: prunerSelect.value,
    space_version: thread.current_space_version,
    fidelity,
    init_checkpoint: [0, 0],
    n_calls: Number(callsInput.value),
    n_random: Number(randomInput.value),
    seed: Number(seedInput.value),
    status: "pending",
    hyperband: null,
    tpe: null,
    n_imported: 0,
    best_trial_id: null,
    n_trials: 0,
    n_complete: 0,
    n_pruned: 0,
    n_failed: 0,
  });

  const syncWarmControl = (): void => {
    const fidelity = formFidelity();
    const source = sprints.find((s) => s.id === sourceSelect.value);
    if (!fidelity || !source) {
      primeModeWarm.disabled = !fidelity || !source;
      warmLabel.removeAttribute("title");
      return;
    }
    const target = targetCandidate(fidelity);
    const disabled = warmPrimeDisabled(target, source);
    primeModeWarm.disabled = disabled;
    if (disabled) {
      warmLabel.setAttribute("title", warmPrimeTooltip(target, source));
      if (primeModeWarm.checked) {
        primeModeWarm.checked = false;
        primeModeNone.checked = true;
      }
    } else {
      warmLabel.removeAttribute("title");
    }
  };

  for (const input of [fidelityInput, schedulerInput, earlyStopSelect, calibrationInput, sourceSelect]) {
    input.addEventListener("change", syncWarmControl);
    input.addEventListener("input", syncWarmControl);
  }
  syncWarmControl();

  const submit = el(
    "button",
    {
      class: "create-sprint",
      onclick: () => {
        const fidelity = formFidelity();
        if (!fidelity) {
          status.textContent = "bad fidelity designation";
          return;
        }
        const mode = primeModeWarm.checked ? "warm" : primeModeCold.checked ? "cold" : null;
        const source = sprints.find((s) => s.id === sourceSelect.value);
        if (mode && source) {
          const violation = primeViolationFor(mode, targetCandidate(fidelity), source, overrideInput.checked);
          if (violation) {
            status.textContent = `priming would be rejected: ${violation}`;
            return;
          }
        }
        const body: import("./types.js").SprintBody = {
          thread_id: thread.id,
          sampler: samplerSelect.value,
          pruner: prunerSelect.value,
          fidelity,
          n_calls: Number(callsInput.value),
          n_random: Number(randomInput.value),
          seed: Number(seedInput.value),
          suffix: suffixInput.value,
        };
        if (mode && source) {
          body.priming = {
            mode,
            source: source.id,
            top_n: Number(topNInput.value),
            override_init_mismatch: overrideInput.checked,
          };
        }
        status.textContent = "creating…";
        hooks
          .create(body)
          .then((sprint) => {
            status.textContent = `created ${sprint.id}`;
            hooks.onCreated?.(sprint);
          })
          .catch((err: unknown) => {
            status.textContent = errorText(err);
            status.classList.add("submit-error");
          });
      },
    },
    "create follow-up sprint",
  );

  return el(
    "div",
    { class: "follow-up-form" },
    el("div", {}, el("label", {}, "fidelity ", fidelityInput), el("label", {}, " scheduler ", schedulerInput)),
    el(
      "div",
      {},
      el("label", {}, "early stop ", earlyStopSelect),
      el("label", {}, " calibration epochs ", calibrationInput),
    ),
    el(
      "div",
      {},
      el("label", {}, "sampler ", samplerSelect),
      el("label", {}, " pruner ", prunerSelect),
      el("label", {}, " calls ", callsInput),
      el("label", {}, " random ", randomInput),
      el("label", {}, " seed ", seedInput),
      el("label", {}, " suffix ", suffixInput),
    ),
    el(
      "div",
      { class: "priming-row" },
      el("label", {}, primeModeNone, "no priming"),
      warmLabel,
      el("label", {}, primeModeCold, "cold"),
      el("label", {}, " source ", sourceSelect),
      el("label", {}, " top-n ", topNInput),
      el("label", {}, " override init mismatch ", overrideInput),
    ),
    submit,
    status,
  );
}
