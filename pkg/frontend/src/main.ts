import { ApiClient } from "./api.js";
import { SessionController } from "./session.js";
import { renderQValues, renderTranscript, renderView } from "./render.js";
import type { UserInput } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function boot(): void {
  const baseInput = el<HTMLInputElement>("base-url");
  const queryInput = el<HTMLInputElement>("query");
  const policySelect = el<HTMLSelectElement>("policy");
  const startButton = el<HTMLButtonElement>("start");
  const promptPane = el<HTMLDivElement>("prompt");
  const sidePane = el<HTMLDivElement>("diagnostics");

  let api = new ApiClient(baseInput.value);
  let controller: SessionController | null = null;

  async function refreshDiagnostics(): Promise<void> {
    if (!controller) return;
    const { sessionId } = controller.state;
    if (!sessionId) return;
    try {
      const session = await api.getSession(sessionId);
      sidePane.innerHTML =
        renderQValues(session.q_values) + renderTranscript(session.transcript);
    } catch {
      // diagnostics are best-effort; the session pane stays authoritative
    }
  }

  async function loadPolicies(): Promise<void> {
    try {
      const { policies } = await api.listPolicies();
      policySelect.innerHTML = policies
        .map((p) => `<option value="${p}">${p}</option>`)
        .join("");
    } catch {
      policySelect.innerHTML = `<option value="random">random</option>`;
    }
  }

  baseInput.addEventListener("change", () => {
    api = new ApiClient(baseInput.value);
    void loadPolicies();
  });

  startButton.addEventListener("click", () => {
    controller = new SessionController(api, (view) => {
      promptPane.innerHTML = renderView(view);
      void refreshDiagnostics();
    });
    void controller.start(queryInput.value, policySelect.value);
  });

  promptPane.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>(
      "[data-input],[data-retry]",
    );
    if (!target || !controller) return;
    if (target.dataset.retry !== undefined) {
      void controller.retry();
      return;
    }
    const kind = target.dataset.input as string;
    const raw = target.dataset.value;
    let input: UserInput | {};
    switch (kind) {
      case "doc":
        input = { doc: raw === "" ? null : (raw as string) };
        break;
      case "answer":
        input = { answer: raw as "yes" | "no" };
        break;
      case "term": {
        const field = promptPane.querySelector<HTMLInputElement>("[data-input-field=term]");
        const text = raw !== undefined ? raw : (field?.value ?? "").trim();
        input = { term: text === "" ? null : text };
        break;
      }
      case "topic":
        input = { topic: raw === "" ? null : Number(raw) };
        break;
      case "ack":
        input = {};
        break;
      default:
        return;
    }
    void controller.submit(input);
  });

  void loadPolicies();
}

if (typeof document !== "undefined" && document.getElementById("start")) {
  boot();
}
