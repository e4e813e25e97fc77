// Hash-routed single-page app: #/dashboard, #/batch/{i}, #/sentence/{sid}.
// The server is the only authoritative state; every view renders from a
// fresh fetch.

import { Api } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { toast } from "./toast.js";
import { TreeView } from "./tree_view.js";
import { UndoStack } from "./undo.js";

export interface App {
  render: () => Promise<void>;
  root: HTMLElement;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export async function boot(root: HTMLElement, api: Api = new Api()): Promise<App> {
  const undo = new UndoStack();
  let showOrig = true;

  const nav = el("nav", "topnav");
  const home = document.createElement("a");
  home.href = "#/dashboard";
  home.textContent = "treebench";
  home.className = "brand";
  nav.appendChild(home);
  const annotatorInput = document.createElement("input");
  annotatorInput.className = "annotator";
  annotatorInput.placeholder = "annotator id";
  annotatorInput.addEventListener("change", () => {
    api.annotator = annotatorInput.value.trim();
  });
  nav.appendChild(annotatorInput);

  const main = el("main", "view");
  root.textContent = "";
  root.appendChild(nav);
  root.appendChild(main);

  async function renderDashboard(): Promise<void> {
    const dash = new Dashboard(main, { api, refresh: render });
    await dash.render();
  }

  async function renderBatch(index: number): Promise<void> {
    const sentences = await api.getBatchSentences(index);
    main.textContent = "";
    main.appendChild(el("h1", "", `Batch ${index}`));
    const list = el("div", "sentence-list");
    for (const s of sentences) {
      const row = el("div", "sentence-row" + (s.violations.length ? " invalid" : ""));
      const link = document.createElement("a");
      link.href = `#/sentence/${encodeURIComponent(s.sent_id)}`;
      link.textContent = s.sent_id;
      row.appendChild(link);
      row.appendChild(el("span", "sentence-text", s.text));
      const changed = s.tokens.filter((t) => t.changed).length;
      if (changed) row.appendChild(el("span", "sentence-diff", `${changed} corrected`));
      if (s.violations.length) row.appendChild(el("span", "sentence-bad", `${s.violations.length} violations`));
      list.appendChild(row);
    }
    main.appendChild(list);
  }

  async function renderSentence(sid: string): Promise<void> {
    const sentence = await api.getSentence(sid);
    const { labels } = await api.getLabels();
    main.textContent = "";

    const header = el("header", "sentence-header");
    header.appendChild(el("h1", "", sentence.sent_id));
    if (sentence.batch !== null) {
      const back = document.createElement("a");
      back.href = `#/batch/${sentence.batch}`;
      back.textContent = `← batch ${sentence.batch}`;
      header.appendChild(back);
    }
    header.appendChild(el("p", "sentence-text", sentence.text));
    if (sentence.text_orig) {
      const orig = el("p", "sentence-text-orig", sentence.text_orig);
      orig.dir = "rtl";
      header.appendChild(orig);
    }

    const controls = el("div", "editor-controls");
    const undoBtn = document.createElement("button");
    undoBtn.className = "undo";
    undoBtn.textContent = "Undo";
    controls.appendChild(undoBtn);
    const origToggle = document.createElement("button");
    origToggle.className = "toggle-orig";
    origToggle.textContent = showOrig ? "hide second script" : "show second script";
    controls.appendChild(origToggle);
    header.appendChild(controls);
    main.appendChild(header);

    const host = el("div", "tree-host");
    main.appendChild(host);
    const view = new TreeView(host, sentence, { api, labels, undo, showOrig });
    view.render();

    undoBtn.addEventListener("click", () => void view.undoLast());
    origToggle.addEventListener("click", () => {
      showOrig = !showOrig;
      void renderSentence(sid);
    });
  }

  async function render(): Promise<void> {
    const hash = window.location.hash || "#/dashboard";
    try {
      const batchMatch = hash.match(/^#\/batch\/(\d+)$/);
      const sentenceMatch = hash.match(/^#\/sentence\/(.+)$/);
      if (batchMatch) {
        await renderBatch(Number(batchMatch[1]));
      } else if (sentenceMatch) {
        await renderSentence(decodeURIComponent(sentenceMatch[1]));
      } else {
        await renderDashboard();
      }
    } catch (e) {
      main.textContent = "";
      main.appendChild(el("p", "load-error", String(e)));
      toast(String(e));
    }
  }

  window.addEventListener("hashchange", () => void render());
  await render();
  return { render, root };
}
