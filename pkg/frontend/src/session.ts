import { ApiClient, ApiError } from "./api.js";
import type { FinalPayload, PendingPayload, StepResponse, UserInput } from "./types.js";

export type Phase = "idle" | "busy" | "prompt" | "terminal" | "error";

export interface SessionView {
  phase: Phase;
  sessionId: string | null;
  action: string | null;
  pending: PendingPayload | null;
  final: FinalPayload | null;
  error: string | null;
}

/** Key the service expects for each pending payload type. */
const INPUT_KEY: Record<PendingPayload["type"], string> = {
  documents: "doc",
  keyterm: "answer",
  request: "term",
  topics: "topic",
};

/** True iff the input shape is the one the pending payload asks for. */
export function inputMatchesPayload(input: UserInput | {}, pending: PendingPayload): boolean {
  if (pending.type === "keyterm" && pending.term === null) {
    // degenerate prompt: nothing to answer, any acknowledgement goes
    return true;
  }
  return Object.prototype.hasOwnProperty.call(input, INPUT_KEY[pending.type]);
}

/**
 * Drives one session: holds the pending prompt, forwards the user's answer,
 * and guarantees at most one request is ever in flight.
 */
export class SessionController {
  private view: SessionView = {
    phase: "idle",
    sessionId: null,
    action: null,
    pending: null,
    final: null,
    error: null,
  };
  private inflight = false;
  private retryInput: UserInput | {} | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (view: SessionView) => void = () => {},
  ) {}

  get state(): SessionView {
    return { ...this.view };
  }

  private update(patch: Partial<SessionView>): void {
    this.view = { ...this.view, ...patch };
    this.onChange(this.state);
  }

  /** Start a session; resolves once the first prompt (or final list) arrived. */
  async start(query: string, policy: string, qid?: string): Promise<SessionView> {
    if (this.inflight) return this.state;
    this.inflight = true;
    this.update({ phase: "busy", error: null });
    try {
      const res = await this.api.createSession(query, policy, qid);
      this.applyStep(res, res.session_id);
    } catch (err) {
      this.update({ phase: "error", error: describe(err) });
    } finally {
      this.inflight = false;
    }
    return this.state;
  }

  /**
   * Submit the user's answer to the pending prompt. Calls while a request is
   * in flight are dropped, so a double-click issues exactly one step.
   */
  async submit(input: UserInput | {}): Promise<SessionView> {
    if (this.inflight || this.view.phase === "busy") return this.state;
    const pending = this.view.pending;
    if (this.view.phase !== "prompt" && this.view.phase !== "error") {
      throw new Error(`nothing to answer in phase ${this.view.phase}`);
    }
    if (pending === null || !inputMatchesPayload(input, pending)) {
      throw new Error(`input does not match pending ${pending?.type ?? "none"} payload`);
    }
    this.inflight = true;
    this.retryInput = input;
    this.update({ phase: "busy", error: null });
    try {
      const res = await this.api.step(this.view.sessionId as string, input as UserInput);
      this.retryInput = null;
      this.applyStep(res, this.view.sessionId);
    } catch (err) {
      if (err instanceof ApiError) {
        // the service rejected the input; the session itself is still live
        this.retryInput = null;
        this.update({ phase: "prompt", error: describe(err) });
      } else {
        // network failure: keep the input so the user can retry it
        this.update({ phase: "error", error: describe(err) });
      }
    } finally {
      this.inflight = false;
    }
    return this.state;
  }

  /** Re-issue the last answer after a network failure. */
  async retry(): Promise<SessionView> {
    if (this.view.phase !== "error" || this.retryInput === null) return this.state;
    return this.submit(this.retryInput);
  }

  get lastInput(): UserInput | {} | null {
    return this.retryInput;
  }

  private applyStep(res: StepResponse, sessionId: string | null): void {
    if (res.terminal) {
      this.update({
        phase: "terminal",
        sessionId,
        action: res.action,
        pending: null,
        final: res.payload as FinalPayload,
      });
    } else {
      this.update({
        phase: "prompt",
        sessionId,
        action: res.action,
        pending: res.payload as PendingPayload,
        final: null,
      });
    }
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
