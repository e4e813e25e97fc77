// Batch dashboard: score trend across iterations, confusion heat grid,
// and the three loop actions (next batch / finalize / fine-tune) with
// background-job polling.

import { Api, ApiError } from "./api.js";
import { toast } from "./toast.js";
import type { ConfusionPayload, ProjectPayload, SentencePayload, TrendRow } from "./types.js";

export interface DashboardDeps {
  api: Api;
  refresh: () => Promise<void>; // re-render the whole app after a mutation
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderTrend(host: HTMLElement, series: TrendRow[]): void {
  const section = el("section", "trend");
  section.appendChild(el("h2", "", "Batches"));
  if (!series.length) {
    section.appendChild(el("p", "empty", "No finalized batches yet."));
    host.appendChild(section);
    return;
  }
  const table = document.createElement("table");
  table.className = "trend-table";
  const head = document.createElement("tr");
  for (const col of ["batch", "size", "avg words", "UAS", "LAS", "edits", "state"]) {
    head.appendChild(el("th", "", col));
  }
  table.appendChild(head);
  for (const row of series) {
    const tr = document.createElement("tr");
    tr.appendChild(el("td", "", String(row.batch)));
    tr.appendChild(el("td", "", String(row.size)));
    tr.appendChild(el("td", "", row.avg_word_count.toFixed(2)));
    tr.appendChild(el("td", "trend-uas", row.uas.toFixed(4)));
    tr.appendChild(el("td", "trend-las", row.las.toFixed(4)));
    tr.appendChild(el("td", "trend-edits", String(row.edit_count)));
    tr.appendChild(el("td", "", row.state));
    table.appendChild(tr);
  }
  section.appendChild(table);
  host.appendChild(section);
}

export function renderConfusion(host: HTMLElement, confusion: ConfusionPayload, batch: number): void {
  const section = el("section", "confusion");
  section.appendChild(el("h2", "", `Confusion matrix (batch ${batch}, gold rows × system columns)`));
  const max = Math.max(1, ...confusion.counts.flat());
  const table = document.createElement("table");
  table.className = "confusion-grid";
  const head = document.createElement("tr");
  head.appendChild(el("th", "", "gold\\system"));
  for (const label of confusion.labels) head.appendChild(el("th", "", label));
  table.appendChild(head);
  confusion.labels.forEach((gold, gi) => {
    const tr = document.createElement("tr");
    tr.appendChild(el("th", "", gold));
    confusion.labels.forEach((system, pi) => {
      const count = confusion.counts[gi][pi];
      const td = el("td", "cell" + (gi === pi ? " diag" : ""), String(count));
      td.dataset.gold = gold;
      td.dataset.system = system;
      td.style.backgroundColor = `rgba(31, 119, 180, ${count ? 0.15 + (0.75 * count) / max : 0})`;
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  section.appendChild(table);
  host.appendChild(section);
}

export class Dashboard {
  constructor(
    private readonly host: HTMLElement,
    private readonly deps: DashboardDeps,
  ) {}

  async render(): Promise<void> {
    const { api } = this.deps;
    const project = await api.getProject();
    const trend = await api.getTrend();
    this.host.textContent = "";

    const header = el("section", "project-header");
    header.appendChild(el("h1", "", project.name));
    header.appendChild(
      el(
        "p",
        "project-meta",
        `pool remaining: ${project.remaining_pool} · models: ${project.model_versions.length} · ` +
          `current: ${project.model_versions[project.model_versions.length - 1]}`,
      ),
    );
    this.host.appendChild(header);

    await this.renderActions(project);
    renderTrend(this.host, trend.series);

    const list = el("section", "batch-list");
    list.appendChild(el("h2", "", "All batches"));
    for (const b of project.batches) {
      const row = el("div", `batch-row state-${b.state.toLowerCase()}`);
      const link = document.createElement("a");
      link.href = `#/batch/${b.index}`;
      link.textContent = `batch ${b.index}`;
      row.appendChild(link);
      row.appendChild(el("span", "batch-state", b.state));
      row.appendChild(el("span", "batch-size", `${b.sentence_ids.length} sentences`));
      list.appendChild(row);
    }
    this.host.appendChild(list);

    const reported = [...project.batches].reverse().find((b) => b.report);
    if (reported?.report) {
      renderConfusion(this.host, reported.report.confusion, reported.index);
    }
  }

  private async renderActions(project: ProjectPayload): Promise<void> {
    const { api } = this.deps;
    const actions = el("section", "actions");
    const status = el("span", "job-status");
    const inProgress = project.batches.find((b) =>
      ["SAMPLED", "PSEUDO_ANNOTATED", "IN_CORRECTION"].includes(b.state),
    );

    const nextBtn = document.createElement("button");
    nextBtn.className = "action next-batch";
    nextBtn.textContent = "Next batch";
    nextBtn.disabled = Boolean(inProgress) || project.remaining_pool === 0;
    nextBtn.addEventListener("click", () =>
      void this.runJob(status, nextBtn, async () => {
        const { job } = await api.nextBatch();
        await api.awaitJob(job);
      }),
    );
    actions.appendChild(nextBtn);

    if (inProgress) {
      const finalizeBtn = document.createElement("button");
      finalizeBtn.className = "action finalize";
      finalizeBtn.textContent = `Finalize batch ${inProgress.index}`;
      let sentences: SentencePayload[] = [];
      try {
        sentences = await api.getBatchSentences(inProgress.index);
      } catch {
        sentences = [];
      }
      const invalid = sentences.filter((s) => s.violations.length > 0);
      // An invalid draft can never be finalized from the UI.
      finalizeBtn.disabled = invalid.length > 0;
      if (invalid.length > 0) {
        finalizeBtn.title = `${invalid.length} sentence(s) still invalid`;
        const warn = el("div", "finalize-blocked");
        for (const s of invalid) {
          warn.appendChild(el("div", "finalize-blocked-row", `${s.sent_id}: ${s.violations.join("; ")}`));
        }
        actions.appendChild(warn);
      }
      finalizeBtn.addEventListener("click", () =>
        void this.runJob(status, finalizeBtn, async () => {
          try {
            await api.finalize(inProgress.index);
          } catch (e) {
            if (e instanceof ApiError && e.code === "validation_failed") {
              this.showViolationsDialog(e.details as string[]);
            }
            throw e;
          }
        }),
      );
      actions.appendChild(finalizeBtn);
    }

    const finalized = [...project.batches].reverse().find((b) => b.state === "GOLD_FINALIZED");
    if (finalized) {
      const ftBtn = document.createElement("button");
      ftBtn.className = "action finetune";
      ftBtn.textContent = `Fine-tune on batch ${finalized.index}`;
      ftBtn.addEventListener("click", () =>
        void this.runJob(status, ftBtn, async () => {
          const res = await api.finetune(finalized.index);
          if (res.job) await api.awaitJob(res.job);
        }),
      );
      actions.appendChild(ftBtn);
    }

    actions.appendChild(status);
    this.host.appendChild(actions);
  }

  private showViolationsDialog(details: string[] | null): void {
    const dialog = el("div", "violations-dialog");
    dialog.appendChild(el("h3", "", "Cannot finalize: invalid sentences"));
    for (const v of details ?? []) {
      dialog.appendChild(el("div", "violation", v));
    }
    const close = document.createElement("button");
    close.textContent = "Close";
    close.addEventListener("click", () => dialog.remove());
    dialog.appendChild(close);
    this.host.appendChild(dialog);
  }

  private async runJob(
    status: HTMLElement,
    button: HTMLButtonElement,
    work: () => Promise<void>,
  ): Promise<void> {
    button.disabled = true;
    status.textContent = "working…";
    try {
      await work();
      status.textContent = "done";
      await this.deps.refresh();
    } catch (e) {
      status.textContent = "failed";
      toast(e instanceof ApiError ? e.message : String(e));
      button.disabled = false;
    }
  }
}
