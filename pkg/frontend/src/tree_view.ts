// Dependency tree editor: token row (dual script), arcs above, click-based
// head re-attachment, label editing with autocomplete, diff and validation
// badges. The server response after each PATCH is the only source of truth;
// optimistic paints roll back when the request fails.

import { Api, ApiError } from "./api.js";
import { arcPaths, layoutArcs } from "./arcs.js";
import { toast } from "./toast.js";
import { UndoStack } from "./undo.js";
import type { SentencePayload, TokenPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const CELL_WIDTH = 92;
const LEVEL_HEIGHT = 30;

export interface TreeViewOptions {
  api: Api;
  labels: string[];
  undo: UndoStack;
  showOrig: boolean;
  onChange?: (s: SentencePayload) => void;
}

/** Token ids named by validation messages, e.g. "token 3: ..." or "cycle: 1,2". */
export function tokensInViolations(violations: string[]): Set<number> {
  const out = new Set<number>();
  for (const v of violations) {
    const single = v.match(/^token (\d+)/);
    if (single) out.add(Number(single[1]));
    const listed = v.match(/(?:cycle:|tokens) ([\d,]+)/);
    if (listed) {
      for (const part of listed[1].split(",")) out.add(Number(part));
    }
  }
  return out;
}

export class TreeView {
  private sentence: SentencePayload;
  private selected: number | null = null; // token id awaiting a new head
  private editingLabel: number | null = null;

  constructor(
    private readonly container: HTMLElement,
    sentence: SentencePayload,
    private readonly options: TreeViewOptions,
  ) {
    this.sentence = sentence;
  }

  get current(): SentencePayload {
    return this.sentence;
  }

  update(sentence: SentencePayload): void {
    this.sentence = sentence;
    this.render();
  }

  render(): void {
    const s = this.sentence;
    const n = s.tokens.length;
    const flagged = tokensInViolations(s.violations);
    this.container.textContent = "";
    this.container.classList.add("tree-view");

    const layout = layoutArcs(s.tokens.map((t) => t.head));
    const svgHeight = (layout.maxLevel + 1) * LEVEL_HEIGHT + 8;
    const width = Math.max(n * CELL_WIDTH, CELL_WIDTH);
    const centers = s.tokens.map((_, i) => i * CELL_WIDTH + CELL_WIDTH / 2);

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("class", "arcs");
    svg.setAttribute("width", String(width));
    svg.setAttribute("height", String(svgHeight));
    for (const { arc, path, labelX, labelY, arrowX } of arcPaths(layout, centers, svgHeight - 2, LEVEL_HEIGHT)) {
      const token = s.tokens[arc.dep];
      const p = document.createElementNS(SVG_NS, "path");
      p.setAttribute("d", path);
      p.setAttribute("class", "arc" + (flagged.has(token.id) ? " arc-invalid" : ""));
      p.setAttribute("data-dep", String(token.id));
      svg.appendChild(p);

      const arrow = document.createElementNS(SVG_NS, "path");
      const y = svgHeight - 2;
      arrow.setAttribute("d", `M ${arrowX - 4} ${y - 6} L ${arrowX + 4} ${y - 6} L ${arrowX} ${y} Z`);
      arrow.setAttribute("class", "arrow");
      svg.appendChild(arrow);

      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(labelX));
      label.setAttribute("y", String(labelY));
      label.setAttribute("text-anchor", "middle");
      label.setAttribute("class", "arc-label");
      label.setAttribute("data-label-for", String(token.id));
      label.textContent = token.deprel;
      label.addEventListener("click", () => this.openLabelEditor(token.id));
      svg.appendChild(label);
    }
    this.container.appendChild(svg);

    const row = document.createElement("div");
    row.className = "token-row";
    for (const token of s.tokens) {
      row.appendChild(this.tokenCell(token, flagged));
    }
    this.container.appendChild(row);

    const controls = document.createElement("div");
    controls.className = "attach-controls";
    if (this.selected !== null) {
      const hint = document.createElement("span");
      hint.className = "attach-hint";
      hint.textContent = `re-attaching token ${this.selected}: click its new head, ROOT, or press Escape`;
      controls.appendChild(hint);
      const rootBtn = document.createElement("button");
      rootBtn.className = "root-target";
      rootBtn.textContent = "ROOT";
      rootBtn.addEventListener("click", () => void this.attachTo(0));
      controls.appendChild(rootBtn);
    }
    this.container.appendChild(controls);

    const banner = document.createElement("div");
    banner.className = "violations" + (s.violations.length ? " has-violations" : "");
    for (const v of s.violations) {
      const line = document.createElement("div");
      line.className = "violation";
      line.textContent = v;
      banner.appendChild(line);
    }
    this.container.appendChild(banner);
  }

  private tokenCell(token: TokenPayload, flagged: Set<number>): HTMLElement {
    const cell = document.createElement("div");
    cell.className = "token";
    cell.dataset.tokenId = String(token.id);
    if (token.changed) cell.classList.add("changed");
    if (flagged.has(token.id)) cell.classList.add("invalid");
    if (this.selected === token.id) cell.classList.add("selected");
    if (token.head === 0) cell.classList.add("is-root");

    const id = document.createElement("div");
    id.className = "token-id";
    id.textContent = String(token.id) + (token.head === 0 ? " • root" : "");
    cell.appendChild(id);

    const form = document.createElement("div");
    form.className = "token-form";
    form.textContent = token.form;
    if (token.changed) {
      const marker = document.createElement("span");
      marker.className = "diff-marker";
      marker.title = "differs from the pseudo-annotation";
      marker.textContent = "●";
      form.appendChild(marker);
    }
    cell.appendChild(form);

    if (this.options.showOrig && token.orig) {
      const orig = document.createElement("div");
      orig.className = "token-orig";
      orig.dir = "rtl";
      orig.textContent = token.orig;
      cell.appendChild(orig);
    }

    const upos = document.createElement("div");
    upos.className = "token-upos";
    upos.textContent = token.upos;
    cell.appendChild(upos);

    const deprel = document.createElement("button");
    deprel.className = "token-deprel";
    deprel.dataset.deprelFor = String(token.id);
    deprel.textContent = token.deprel;
    if (token.deprel !== "_" && token.deprel !== "root" && !this.options.labels.includes(token.deprel)) {
      deprel.classList.add("unknown-label");
      deprel.title = "label is not in the known inventory";
    }
    deprel.addEventListener("click", (e) => {
      e.stopPropagation();
      this.openLabelEditor(token.id);
    });
    cell.appendChild(deprel);

    cell.addEventListener("click", () => void this.onTokenClick(token.id));
    cell.tabIndex = 0;
    cell.addEventListener("keydown", (e) => {
      if (e.key === "Escape") {
        this.selected = null;
        this.render();
      } else if (e.key === "Enter" && this.selected === null) {
        void this.onTokenClick(token.id);
      } else if (e.key === "Enter" && this.selected !== null && this.selected !== token.id) {
        void this.attachTo(token.id);
      }
    });
    return cell;
  }

  private async onTokenClick(tokenId: number): Promise<void> {
    if (!this.sentence.editable) {
      toast("this batch is finalized; editing is disabled", "info");
      return;
    }
    if (this.selected === null) {
      this.selected = tokenId;
      this.render();
      return;
    }
    if (this.selected === tokenId) {
      this.selected = null;
      this.render();
      return;
    }
    await this.attachTo(tokenId);
  }

  private async attachTo(newHead: number): Promise<void> {
    const dep = this.selected;
    if (dep === null) return;
    const token = this.sentence.tokens.find((t) => t.id === dep);
    if (!token) return;
    this.selected = null;
    await this.patch(dep, { head: newHead }, { head: token.head ?? undefined });
  }

  private openLabelEditor(tokenId: number): void {
    if (!this.sentence.editable) {
      toast("this batch is finalized; editing is disabled", "info");
      return;
    }
    if (this.editingLabel === tokenId) return;
    this.editingLabel = tokenId;
    const token = this.sentence.tokens.find((t) => t.id === tokenId);
    if (!token) return;

    const cell = this.container.querySelector<HTMLElement>(`[data-token-id="${tokenId}"]`);
    const host = cell ?? this.container;
    const editor = document.createElement("form");
    editor.className = "label-editor";
    const input = document.createElement("input");
    input.className = "label-input";
    input.value = token.deprel === "_" ? "" : token.deprel;
    const listId = `labels-${tokenId}`;
    input.setAttribute("list", listId);
    const datalist = document.createElement("datalist");
    datalist.id = listId;
    for (const label of this.options.labels) {
      const option = document.createElement("option");
      option.value = label;
      datalist.appendChild(option);
    }
    editor.appendChild(input);
    editor.appendChild(datalist);
    host.appendChild(editor);
    input.focus();

    const close = () => {
      this.editingLabel = null;
      editor.remove();
    };
    input.addEventListener("keydown", (e) => {
      if (e.key === "Escape") close();
    });
    editor.addEventListener("submit", (e) => {
      e.preventDefault();
      const value = input.value.trim();
      close();
      if (value && value !== token.deprel) {
        void this.patch(tokenId, { deprel: value }, { deprel: token.deprel });
      }
    });
  }

  private async patch(
    tokenId: number,
    change: { head?: number; deprel?: string; upos?: string },
    reverse: { head?: number; deprel?: string; upos?: string },
  ): Promise<void> {
    const before = this.sentence;
    try {
      const updated = await this.options.api.patchToken(this.sentence.sent_id, tokenId, change);
      this.options.undo.push({ sentId: this.sentence.sent_id, tokenId, reverse });
      this.update(updated);
      this.options.onChange?.(updated);
    } catch (e) {
      this.update(before); // rollback
      toast(e instanceof ApiError ? e.message : String(e));
    }
  }

  /** Reverse the most recent edit of this session via a PATCH. */
  async undoLast(): Promise<void> {
    const entry = this.options.undo.pop();
    if (!entry) {
      toast("nothing to undo", "info");
      return;
    }
    try {
      const updated = await this.options.api.patchToken(entry.sentId, entry.tokenId, entry.reverse);
      if (updated.sent_id === this.sentence.sent_id) {
        this.update(updated);
        this.options.onChange?.(updated);
      }
    } catch (e) {
      toast(e instanceof ApiError ? e.message : String(e));
    }
  }
}
