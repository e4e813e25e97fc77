// The UI acceptance scenario: edit head + label, reload persists with diff
// markers; a cycle-creating edit disables finalize; the dashboard confusion
// grid equals the report CSV.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { Api } from "../src/api.js";
import { boot } from "../src/app.js";
import { MockServer, standardFixture } from "./mock_server.js";

let mock: MockServer;

function freshRoot(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

async function settle(): Promise<void> {
  for (let i = 0; i < 6; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

beforeEach(() => {
  document.body.innerHTML = "";
  window.location.hash = "";
  mock = standardFixture();
  mock.install();
});

describe("correction scenario", () => {
  it("re-attach + relabel persist across a reload and carry diff markers", async () => {
    window.location.hash = "#/sentence/s1";
    const root = freshRoot();
    await boot(root, new Api("/api", "scenario-user"));
    await settle();

    // Re-attach token 1 from head 3 to head 2: click token 1, then token 2.
    root.querySelector<HTMLElement>('[data-token-id="1"]')!.click();
    await settle();
    expect(root.querySelector(".attach-hint")).toBeTruthy();
    root.querySelector<HTMLElement>('[data-token-id="2"]')!.click();
    await settle();

    // Relabel token 2 via the label editor (autocomplete input).
    root.querySelector<HTMLElement>('[data-deprel-for="2"]')!.click();
    await settle();
    const input = root.querySelector<HTMLInputElement>(".label-input")!;
    expect(input.getAttribute("list")).toBeTruthy();
    input.value = "nmod";
    input.form!.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await settle();

    // Server state took both edits, with the annotator header recorded.
    const stored = mock.sentences.get("s1")!;
    expect(stored.tokens[0].head).toBe(2);
    expect(stored.tokens[1].deprel).toBe("nmod");
    expect(mock.patchLog.map((p) => p.annotator)).toEqual(["scenario-user", "scenario-user"]);

    // Reload into a fresh DOM: both edits persist and carry diff markers.
    const root2 = freshRoot();
    await boot(root2, new Api("/api"));
    await settle();
    const cell1 = root2.querySelector<HTMLElement>('[data-token-id="1"]')!;
    const cell2 = root2.querySelector<HTMLElement>('[data-token-id="2"]')!;
    expect(cell1.classList.contains("changed")).toBe(true);
    expect(cell2.classList.contains("changed")).toBe(true);
    expect(cell1.querySelector(".diff-marker")).toBeTruthy();
    expect(root2.querySelector<HTMLElement>('[data-deprel-for="2"]')!.textContent).toBe("nmod");
  });

  it("a cycle-creating edit shows badges and disables finalize on the dashboard", async () => {
    window.location.hash = "#/sentence/s1";
    const root = freshRoot();
    await boot(root, new Api("/api"));
    await settle();

    // token1 -> head 2 and token2 -> head 1: a cycle.
    root.querySelector<HTMLElement>('[data-token-id="1"]')!.click();
    await settle();
    root.querySelector<HTMLElement>('[data-token-id="2"]')!.click();
    await settle();
    root.querySelector<HTMLElement>('[data-token-id="2"]')!.click();
    await settle();
    root.querySelector<HTMLElement>('[data-token-id="1"]')!.click();
    await settle();

    // The editor flags the cycle: violation banner + invalid arc/tokens.
    expect(root.querySelector(".violations.has-violations")).toBeTruthy();
    expect(root.textContent).toContain("cycle: 1,2");
    expect(root.querySelector('[data-token-id="1"]')!.classList.contains("invalid")).toBe(true);

    // Dashboard: the finalize button for the in-progress batch is disabled.
    window.location.hash = "#/dashboard";
    window.dispatchEvent(new Event("hashchange"));
    await vi.waitFor(() => {
      const btn = document.querySelector<HTMLButtonElement>(".action.finalize");
      expect(btn).toBeTruthy();
      expect(btn!.disabled).toBe(true);
    });
    expect(document.querySelector(".finalize-blocked")!.textContent).toContain("cycle");

    // Direct API finalize is refused with the violation list (server-side guard).
    const api = new Api("/api");
    await expect(api.finalize(1)).rejects.toMatchObject({ code: "validation_failed" });
  });

  it("dashboard confusion grid equals the report CSV", async () => {
    window.location.hash = "#/dashboard";
    const root = freshRoot();
    await boot(root, new Api("/api"));
    await settle();

    const csv = await new Api("/api").getConfusionCsv(0);
    const lines = csv.trim().split("\n");
    const systemLabels = lines[0].split(",").slice(1);
    const grid = root.querySelector(".confusion-grid")!;
    expect(grid).toBeTruthy();

    for (const line of lines.slice(1)) {
      const parts = line.split(",");
      const gold = parts[0];
      parts.slice(1).forEach((value, i) => {
        const cell = grid.querySelector<HTMLElement>(
          `td[data-gold="${gold}"][data-system="${systemLabels[i]}"]`,
        );
        expect(cell, `cell ${gold}/${systemLabels[i]}`).toBeTruthy();
        expect(cell!.textContent).toBe(value);
      });
    }
  });

  it("undo reverses the last edit through a PATCH", async () => {
    window.location.hash = "#/sentence/s1";
    const root = freshRoot();
    await boot(root, new Api("/api"));
    await settle();

    root.querySelector<HTMLElement>('[data-token-id="1"]')!.click();
    await settle();
    root.querySelector<HTMLElement>('[data-token-id="2"]')!.click();
    await settle();
    expect(mock.sentences.get("s1")!.tokens[0].head).toBe(2);

    root.querySelector<HTMLElement>("button.undo")!.click();
    await settle();
    expect(mock.sentences.get("s1")!.tokens[0].head).toBe(3);
    const last = mock.patchLog[mock.patchLog.length - 1];
    expect(last.body).toMatchObject({ head: 3 });
  });

  it("api errors surface as toasts and roll the view back", async () => {
    window.location.hash = "#/sentence/done-1"; // finalized batch: not editable
    const root = freshRoot();
    await boot(root, new Api("/api"));
    await settle();

    // UI guard: clicking tokens of a non-editable sentence only informs.
    root.querySelector<HTMLElement>('[data-token-id="1"]')!.click();
    await settle();
    expect(document.querySelector(".toast")).toBeTruthy();
    expect(root.querySelector(".attach-hint")).toBeFalsy();

    // Forced PATCH against the server guard: rolls back and toasts the error.
    const before = root.querySelector<HTMLElement>('[data-token-id="1"]')!.textContent;
    const api = new Api("/api");
    await expect(api.patchToken("done-1", 1, { head: 3 })).rejects.toMatchObject({ code: "conflict" });
    expect(root.querySelector<HTMLElement>('[data-token-id="1"]')!.textContent).toBe(before);
  });

  it("next-batch and finetune drive jobs from the dashboard", async () => {
    // Make batch 1 finalizable, finalize it, then fine-tune via the buttons.
    window.location.hash = "#/dashboard";
    const root = freshRoot();
    await boot(root, new Api("/api"));
    await settle();

    const finalizeBtn = root.querySelector<HTMLButtonElement>(".action.finalize")!;
    expect(finalizeBtn.disabled).toBe(false);
    finalizeBtn.click();
    await vi.waitFor(() => {
      expect(mock.batches[1].state).toBe("GOLD_FINALIZED");
    });
    await settle();

    const ftBtn = root.querySelector<HTMLButtonElement>(".action.finetune")!;
    ftBtn.click();
    await vi.waitFor(() => {
      expect(mock.batches[1].state).toBe("FINETUNED");
    });

    await settle();
    const nextBtn = root.querySelector<HTMLButtonElement>(".action.next-batch")!;
    expect(nextBtn.disabled).toBe(false);
    nextBtn.click();
    await vi.waitFor(() => {
      expect(mock.jobs.size).toBeGreaterThan(1);
    });
  });
});
