// Inline error/info toasts; API failures must never be silent.

let container: HTMLElement | null = null;

function ensureContainer(): HTMLElement {
  if (!container || !document.body.contains(container)) {
    container = document.createElement("div");
    container.className = "toasts";
    document.body.appendChild(container);
  }
  return container;
}

export function toast(message: string, kind: "error" | "info" = "error", ttlMs = 6000): void {
  const el = document.createElement("div");
  el.className = `toast toast-${kind}`;
  el.setAttribute("role", "alert");
  el.textContent = message;
  ensureContainer().appendChild(el);
  setTimeout(() => el.remove(), ttlMs);
}
