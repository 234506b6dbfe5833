import { describe, expect, it, vi } from "vitest";
import { ApiClient, ApiError } from "../src/api.js";
import { SessionController, inputMatchesPayload } from "../src/session.js";
import type { PendingPayload } from "../src/types.js";

const keytermPrompt = {
  session_id: "s1",
  action: "return_keyterm",
  payload: { type: "keyterm", term: "banana" },
  terminal: false,
};

const finalStep = {
  action: "show_list",
  payload: { type: "final", docs: [{ id: "d1", score: -1.5 }] },
  terminal: true,
};

function apiWith(overrides: Partial<Record<keyof ApiClient, unknown>>): ApiClient {
  return Object.assign(Object.create(ApiClient.prototype), {
    baseUrl: "http://svc",
    ...overrides,
  }) as ApiClient;
}

describe("inputMatchesPayload", () => {
  const cases: Array<[PendingPayload, object, boolean]> = [
    [{ type: "documents", docs: [] }, { doc: "d1" }, true],
    [{ type: "documents", docs: [] }, { answer: "yes" }, false],
    [{ type: "keyterm", term: "x" }, { answer: "no" }, true],
    [{ type: "keyterm", term: "x" }, { term: "x" }, false],
    [{ type: "keyterm", term: null }, {}, true],
    [{ type: "request", query_terms: [] }, { term: "extra" }, true],
    [{ type: "request", query_terms: [] }, { topic: 1 }, false],
    [{ type: "topics", topics: [] }, { topic: 0 }, true],
    [{ type: "topics", topics: [] }, { doc: null }, false],
  ];
  it.each(cases)("payload %o with input %o -> %s", (pending, input, expected) => {
    expect(inputMatchesPayload(input as any, pending)).toBe(expected);
  });
});

describe("SessionController", () => {
  it("start renders the first prompt", async () => {
    const api = apiWith({ createSession: vi.fn(async () => keytermPrompt) });
    const controller = new SessionController(api);
    const view = await controller.start("fruit", "random");
    expect(view.phase).toBe("prompt");
    expect(view.pending).toEqual({ type: "keyterm", term: "banana" });
    expect(view.sessionId).toBe("s1");
  });

  it("submit advances to the final list", async () => {
    const api = apiWith({
      createSession: vi.fn(async () => keytermPrompt),
      step: vi.fn(async () => finalStep),
    });
    const controller = new SessionController(api);
    await controller.start("fruit", "random");
    const view = await controller.submit({ answer: "no" });
    expect(view.phase).toBe("terminal");
    expect(view.final?.docs[0].id).toBe("d1");
    expect(view.pending).toBeNull();
  });

  it("rejects input whose shape does not match the pending payload", async () => {
    const api = apiWith({ createSession: vi.fn(async () => keytermPrompt) });
    const controller = new SessionController(api);
    await controller.start("fruit", "random");
    await expect(controller.submit({ topic: 2 })).rejects.toThrow(/does not match/);
  });

  it("issues exactly one step for overlapping submits", async () => {
    let resolve!: (v: unknown) => void;
    const step = vi.fn(() => new Promise((r) => (resolve = r)));
    const api = apiWith({
      createSession: vi.fn(async () => keytermPrompt),
      step,
    });
    const controller = new SessionController(api);
    await controller.start("fruit", "random");
    const first = controller.submit({ answer: "yes" });
    const second = controller.submit({ answer: "yes" }); // double click
    resolve(finalStep);
    await Promise.all([first, second]);
    expect(step).toHaveBeenCalledTimes(1);
  });

  it("keeps the input for retry after a network failure", async () => {
    const step = vi
      .fn()
      .mockRejectedValueOnce(new TypeError("fetch failed"))
      .mockResolvedValueOnce(finalStep);
    const api = apiWith({ createSession: vi.fn(async () => keytermPrompt), step });
    const controller = new SessionController(api);
    await controller.start("fruit", "random");
    const failed = await controller.submit({ answer: "no" });
    expect(failed.phase).toBe("error");
    expect(controller.lastInput).toEqual({ answer: "no" });
    const view = await controller.retry();
    expect(view.phase).toBe("terminal");
    expect(step).toHaveBeenCalledTimes(2);
    expect(step.mock.calls[1][1]).toEqual({ answer: "no" });
  });

  it("returns to the prompt when the service rejects the input", async () => {
    const step = vi.fn().mockRejectedValueOnce(new ApiError("bad input", 400));
    const api = apiWith({ createSession: vi.fn(async () => keytermPrompt), step });
    const controller = new SessionController(api);
    await controller.start("fruit", "random");
    const view = await controller.submit({ answer: "no" });
    expect(view.phase).toBe("prompt");
    expect(view.error).toBe("bad input");
    expect(controller.lastInput).toBeNull();
  });

  it("notifies the onChange observer for every phase change", async () => {
    const phases: string[] = [];
    const api = apiWith({ createSession: vi.fn(async () => keytermPrompt) });
    const controller = new SessionController(api, (v) => phases.push(v.phase));
    await controller.start("fruit", "random");
    expect(phases).toEqual(["busy", "prompt"]);
  });
});
