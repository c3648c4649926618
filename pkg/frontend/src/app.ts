// Application wiring: server mutations, then a full refresh and re-render.
// The rendered view is always a function of the latest GET /sessions/{id}
// response; only the phrase-list draft being composed lives client-side.

import { ApiError, SessionApi, type Session } from "./api.js";
import { renderSession, type Handlers } from "./render.js";

export interface AppState {
  session: Session | null;
  drafts: Map<number, string[]>;
  draftErrors: Map<number, string>;
  busy: boolean;
  error: string | null;
}

export class App {
  readonly api: SessionApi;
  private state: AppState = {
    session: null,
    drafts: new Map(),
    draftErrors: new Map(),
    busy: false,
    error: null,
  };
  private createForm!: HTMLFormElement;
  private sessionHost!: HTMLElement;
  private errorHost!: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    apiBase = "",
  ) {
    this.api = new SessionApi(apiBase);
    this.mountChrome();
    this.render();
  }

  getState(): AppState {
    return this.state;
  }

  private mountChrome(): void {
    this.root.textContent = "";
    const title = document.createElement("h1");
    title.textContent = "Bookended story sessions";

    this.createForm = document.createElement("form");
    this.createForm.dataset.testid = "create-form";
    const input = document.createElement("input");
    input.dataset.testid = "start-input";
    input.placeholder = "Enter a start sentence";
    input.size = 60;
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.dataset.testid = "create-session";
    submit.textContent = "Start a session";
    this.createForm.append(input, submit);
    this.createForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.createSession(input.value);
    });

    this.errorHost = document.createElement("div");
    this.errorHost.className = "error-host";
    this.errorHost.dataset.testid = "error";

    this.sessionHost = document.createElement("div");
    this.sessionHost.className = "session-host";

    this.root.append(title, this.createForm, this.errorHost, this.sessionHost);
  }

  private handlers(): Handlers {
    return {
      onDraftAdd: (attempt, token) => this.draftAdd(attempt, token),
      onDraftRemove: (attempt, position) => this.draftEdit(attempt, (d) => d.splice(position, 1)),
      onDraftMove: (attempt, position, delta) =>
        this.draftEdit(attempt, (d) => {
          const target = position + delta;
          if (target < 0 || target >= d.length) return;
          [d[position], d[target]] = [d[target], d[position]];
        }),
      onDraftSubmit: (attempt) => void this.submitDraft(attempt),
      onGenerateStop: (attempt) => void this.mutate(() => this.api.generateStop(this.sessionId(), attempt)),
      onStep: (attempt) => void this.mutate(() => this.api.infillStep(this.sessionId(), attempt)),
      onComplete: (attempt) => void this.mutate(() => this.api.infillComplete(this.sessionId(), attempt)),
      onScore: (attempt) => void this.mutate(() => this.api.score(this.sessionId(), attempt)),
    };
  }

  private sessionId(): string {
    if (!this.state.session) throw new Error("no active session");
    return this.state.session.id;
  }

  private draftTokens(attempt: number): string[] {
    const existing = this.state.drafts.get(attempt);
    if (existing) return existing;
    const base = [...(this.state.session?.attempts[attempt]?.phrase_list ?? [])];
    this.state.drafts.set(attempt, base);
    return base;
  }

  private draftAdd(attempt: number, raw: string): void {
    const token = raw.trim();
    if (!token) return;
    const draft = this.draftTokens(attempt);
    if (draft.includes(token)) {
      this.state.draftErrors.set(attempt, `duplicate token: ${token}`);
    } else {
      draft.push(token);
      this.state.draftErrors.delete(attempt);
    }
    this.render();
  }

  private draftEdit(attempt: number, edit: (draft: string[]) => void): void {
    edit(this.draftTokens(attempt));
    this.state.draftErrors.delete(attempt);
    this.render();
  }

  async createSession(start: string, scheme = "lm", n?: number): Promise<void> {
    await this.withBusy(async () => {
      const session = await this.api.createSession(start, scheme, n);
      this.state.session = session;
      this.state.drafts = new Map();
      this.state.draftErrors = new Map();
    });
  }

  private async submitDraft(attempt: number): Promise<void> {
    const tokens = this.draftTokens(attempt);
    await this.mutate(() => this.api.editPhraseList(this.sessionId(), tokens));
    this.state.drafts.delete(attempt);
    this.render();
  }

  async refresh(): Promise<void> {
    if (!this.state.session) return;
    this.state.session = await this.api.getSession(this.state.session.id);
    this.render();
  }

  private async mutate(operation: () => Promise<unknown>): Promise<void> {
    await this.withBusy(async () => {
      await operation();
      this.state.session = await this.api.getSession(this.sessionId());
    });
  }

  private async withBusy(operation: () => Promise<void>): Promise<void> {
    this.state.busy = true;
    this.state.error = null;
    this.render();
    try {
      await operation();
    } catch (error) {
      this.state.error = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    } finally {
      this.state.busy = false;
      this.render();
    }
  }

  private render(): void {
    this.errorHost.textContent = this.state.error ?? "";
    this.sessionHost.textContent = "";
    if (this.state.session) {
      this.sessionHost.append(
        renderSession(
          {
            session: this.state.session,
            drafts: this.state.drafts,
            draftErrors: this.state.draftErrors,
            busy: this.state.busy,
          },
          this.handlers(),
        ),
      );
    }
  }
}

export function createApp(root: HTMLElement, apiBase = ""): App {
  return new App(root, apiBase);
}
