/** Application bootstrap: wires the client, polling and panels together.
 *
 * Served same-origin with the API (the service can mount the built assets),
 * so the default base URL is empty; `?api=http://host:port` overrides it
 * for development against a remote service.
 */

import { SprintOptClient } from "./api.js";
import { PruneDraft } from "./draft.js";
import {
  refreshBodyPreview,
  renderErrorBanner,
  renderFollowUpForm,
  renderScatterPanel,
  renderSprintTable,
  renderSubmitPanel,
  renderThreadList,
  type SprintRowData,
} from "./dom.js";
import { Poller, SubmissionQueue } from "./state.js";
import type { SprintSummary, ThreadJson } from "./types.js";

interface AppState {
  threads: ThreadJson[];
  selectedThread: ThreadJson | null;
  sprintRows: SprintRowData[];
  selectedSprint: SprintSummary | null;
  draft: PruneDraft | null;
  error: unknown;
}

export function mountApp(root: HTMLElement, client: SprintOptClient): { poller: Poller } {
  const queue = new SubmissionQueue();
  const state: AppState = {
    threads: [],
    selectedThread: null,
    sprintRows: [],
    selectedSprint: null,
    draft: null,
    error: null,
  };

  const threadPane = document.createElement("div");
  threadPane.className = "pane thread-pane";
  const sprintPane = document.createElement("div");
  sprintPane.className = "pane sprint-pane";
  const detailPane = document.createElement("div");
  detailPane.className = "pane detail-pane";
  const errorPane = document.createElement("div");
  errorPane.className = "pane error-pane";
  root.append(errorPane, threadPane, sprintPane, detailPane);

  function renderThreads(): void {
    threadPane.replaceChildren(
      renderThreadList(state.threads, state.selectedThread?.id ?? null, (t) => {
        state.selectedThread = t;
        state.selectedSprint = null;
        state.draft = null;
        detailPane.replaceChildren();
        void refreshSprints();
      }),
    );
  }

  function renderSprints(): void {
    if (!state.selectedThread) {
      sprintPane.replaceChildren();
      return;
    }
    sprintPane.replaceChildren(
      renderSprintTable(state.sprintRows, state.selectedSprint?.id ?? null, (s) => {
        state.selectedSprint = s;
        void renderDetail();
      }),
    );
  }

  function renderError(): void {
    errorPane.replaceChildren();
    if (state.error) errorPane.append(renderErrorBanner(state.error));
  }

  async function refreshThreads(): Promise<void> {
    state.threads = await client.listThreads();
    renderThreads();
  }

  async function refreshSprints(): Promise<void> {
    if (!state.selectedThread) return;
    const thread = await client.thread(state.selectedThread.id);
    state.selectedThread = thread;
    const summaries = await client.threadSprints(thread.id);
    const rows: SprintRowData[] = [];
    for (const sprint of summaries) {
      let spaceParent: number | null = null;
      try {
        const space = await client.threadSpace(thread.id, sprint.space_version);
        spaceParent = space.parent;
      } catch {
        // lineage is cosmetic; the row renders without it
      }
      let provenances: SprintRowData["trialProvenances"] = [];
      if (sprint.n_imported > 0 || sprint.n_trials > 0) {
        try {
          const page = await client.trials(sprint.id, { limit: 100 });
          provenances = page.trials.map((t) => t.provenance);
        } catch {
          provenances = [];
        }
      }
      rows.push({ sprint, spaceParent, trialProvenances: provenances });
    }
    state.sprintRows = rows;
    renderSprints();
  }

  async function renderDetail(): Promise<void> {
    const sprint = state.selectedSprint;
    const thread = state.selectedThread;
    if (!sprint || !thread) return;
    const draft = new PruneDraft(sprint.id);
    state.draft = draft;

    const space = await client.sprintSpace(sprint.id);
    const scattersBox = document.createElement("div");
    scattersBox.className = "scatters";

    const submitPanel = renderSubmitPanel(draft, {
      submit: (body) => queue.enqueue(sprint.id, () => client.prune(sprint.id, body)),
      onSuccess: () => void refreshSprints(),
    });

    for (const dim of space.dimensions) {
      try {
        const payload = await client.scatter(sprint.id, dim.name, draft.k);
        scattersBox.append(
          renderScatterPanel(payload, draft, {
            onDraftChange: () => refreshBodyPreview(submitPanel, draft),
          }),
        );
      } catch (err) {
        scattersBox.append(renderErrorBanner(err));
      }
    }

    const followUp = renderFollowUpForm(
      thread,
      state.sprintRows.map((r) => r.sprint),
      {
        create: (body) => client.createSprint(body),
        onCreated: () => void refreshSprints(),
      },
    );

    detailPane.replaceChildren(scattersBox, submitPanel, followUp);
  }

  const poller = new Poller(async () => {
    try {
      await refreshThreads();
      if (state.selectedThread) await refreshSprints();
      state.error = null;
    } catch (err) {
      state.error = err;
    }
    renderError();
  });

  void poller.refresh();
  poller.start();
  return { poller };
}

export function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "";
  const client = new SprintOptClient(baseUrl);
  const root = document.getElementById("app");
  if (root) mountApp(root, client);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap();
}
