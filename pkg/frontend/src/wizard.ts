/**
 * Wizard controller: wires the API client, the state and the renderer.
 *
 * One request in flight per session, no optimistic rendering: every
 * screen comes from a server view. The active session id persists in
 * sessionStorage, so reloading the page re-attaches to the same session
 * and reconstructs the identical screen from GET /sessions/{id}.
 */

import { ApiClient, type AdvanceInput, type SessionView } from "./api.js";
import { render, type WizardHandlers } from "./render.js";
import {
  initialState,
  withError,
  withPending,
  withRecordSubmitted,
  withView,
  type UiSessionState,
} from "./state.js";

const STORAGE_KEY = "itriage.session";

export class SessionWizard {
  state: UiSessionState = initialState();
  private inflight: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly storage: Storage,
    private readonly defaultTree: string = "main",
  ) {}

  /** Attach to the stored session if one exists, else start fresh. */
  async boot(): Promise<void> {
    const stored = this.storage.getItem(STORAGE_KEY);
    if (stored) {
      await this.run(() => this.api.getSession(stored));
      if (this.state.view) return;
    }
    await this.start(this.defaultTree);
  }

  async start(tree: string): Promise<void> {
    this.state = initialState();
    await this.run(async () => {
      const view = await this.api.createSession(tree);
      this.storage.setItem(STORAGE_KEY, view.session);
      return view;
    });
  }

  /** Resolves once no request is in flight (test hook). */
  whenIdle(): Promise<void> {
    return this.inflight;
  }

  private get sessionId(): string | null {
    return this.state.view?.session ?? this.storage.getItem(STORAGE_KEY);
  }

  private run(operation: () => Promise<SessionView>): Promise<void> {
    if (this.state.pending) return this.inflight;
    this.state = withPending(this.state);
    this.paint();
    const task = (async () => {
      try {
        this.state = withView(this.state, await operation());
      } catch (error) {
        const message = error instanceof Error ? error.message : String(error);
        this.state = withError(this.state, message);
      }
      this.paint();
    })();
    this.inflight = task;
    return task;
  }

  private advance(input: AdvanceInput): Promise<void> {
    const sessionId = this.sessionId;
    if (!sessionId) return Promise.resolve();
    return this.run(() => this.api.advance(sessionId, input));
  }

  private readonly handlers: WizardHandlers = {
    onAnswer: (label) => void this.advance({ answer: label }),
    onAcknowledge: () => void this.advance({ acknowledge: true }),
    onAbort: () => {
      const sessionId = this.sessionId;
      if (sessionId) void this.run(() => this.api.abort(sessionId));
    },
    onRetry: () => {
      // refetch by id: server state was never touched by the failure
      const sessionId = this.sessionId;
      if (sessionId) void this.run(() => this.api.getSession(sessionId));
    },
    onSubmitRecord: () => void this.submitRecord(),
    onRestart: () => void this.start(this.defaultTree),
  };

  private async submitRecord(): Promise<void> {
    const view = this.state.view;
    if (!view || view.status !== "finished_finding" || !view.finding) return;
    if (this.state.pending || this.state.recordSubmitted) return;
    this.state = withPending(this.state);
    this.paint();
    const task = (async () => {
      try {
        await this.api.submitFaultRecord({
          session: view.session,
          ts: new Date().toISOString(),
          mode: view.finding!.mode?.id ?? "unresolved",
          area: view.finding!.mode?.area ?? "unknown",
          duration_s: 0,
          notes: "submitted from the web wizard",
        });
        this.state = withRecordSubmitted(this.state);
      } catch (error) {
        const message = error instanceof Error ? error.message : String(error);
        this.state = withError(this.state, message);
      }
      this.paint();
    })();
    this.inflight = task;
    return task;
  }

  paint(): void {
    render(this.root, this.state, this.handlers);
  }
}
