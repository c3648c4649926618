// End-to-end flow against a real service process running the stub backends:
// the jsdom-driven app clicks through create -> edit -> stop -> steps ->
// score, asserting every displayed value equals the API response field.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionApi, type Session } from "../src/api.js";
import { createApp, type App } from "../src/app.js";

const PORT = 18931;
const BASE = `http://127.0.0.1:${PORT}`;
const FRONTEND_DIR = dirname(dirname(fileURLToPath(import.meta.url)));

let server: ChildProcess;

async function until<T>(probe: () => T | null | undefined | false, timeoutMs = 20000): Promise<T> {
  const startedAt = Date.now();
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() - startedAt > timeoutMs) {
      throw new Error("timed out waiting for condition");
    }
    await new Promise((resolveSleep) => setTimeout(resolveSleep, 40));
  }
}

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 60000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not become healthy");
    await new Promise((resolveSleep) => setTimeout(resolveSleep, 150));
  }
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "bookend-ui-"));
  server = spawn(
    "python3",
    [
      "-m",
      "bookend.cli",
      "serve",
      "--port",
      String(PORT),
      "--data-dir",
      dataDir,
      "--seed",
      "11",
      "--n",
      "5",
      "--frontend-dir",
      join(FRONTEND_DIR, "dist"),
    ],
    { cwd: resolve(FRONTEND_DIR, ".."), stdio: "ignore" },
  );
  await waitForServer();
});

afterAll(() => {
  server?.kill();
});

function q<T extends Element>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing element: ${selector}`);
  return node;
}

function click(selector: string): void {
  q<HTMLButtonElement>(selector).click();
}

function texts(selector: string): string[] {
  return [...document.querySelectorAll(selector)].map((node) => node.textContent ?? "");
}

async function bootApp(): Promise<{ app: App; api: SessionApi }> {
  document.body.innerHTML = '<div id="app"></div>';
  const app = createApp(document.getElementById("app")!, BASE);
  return { app, api: new SessionApi(BASE) };
}

async function createSessionViaForm(start: string): Promise<string> {
  const input = q<HTMLInputElement>('[data-testid="start-input"]');
  input.value = start;
  click('[data-testid="create-session"]');
  const section = await until(() => document.querySelector('[data-testid="session"]'));
  return section.getAttribute("data-session-id")!;
}

describe("interactive session flow", () => {
  it("drives edit, regenerate, step-through, and compare against the API", async () => {
    const { api } = await bootApp();
    const sid = await createSessionViaForm("A husband and his wife are looking for a new home.");

    // the generated phrase list is rendered exactly as served
    let session: Session = await api.getSession(sid);
    expect(texts('[data-attempt="0"] [data-testid="phrase-token"]')).toEqual(
      session.attempts[0].phrase_list,
    );
    expect(session.attempts[0].phrase_list.length).toBeGreaterThan(0);

    // duplicate token is rejected inline, without a server round-trip
    // (re-query after every click: each render rebuilds the DOM)
    q<HTMLInputElement>('[data-attempt="0"] [data-testid="token-input"]').value = "home";
    click('[data-attempt="0"] [data-testid="add-token"]');
    q<HTMLInputElement>('[data-attempt="0"] [data-testid="token-input"]').value = "home";
    click('[data-attempt="0"] [data-testid="add-token"]');
    expect(q('[data-testid="draft-error"]').textContent).toContain("duplicate token");
    expect((await api.getSession(sid)).attempts).toHaveLength(1);

    // submitting the edited list appends a new attempt card
    click('[data-attempt="0"] [data-testid="submit-phrase-list"]');
    await until(() => document.querySelectorAll('[data-testid="attempt-card"]').length === 2);
    session = await api.getSession(sid);
    expect(session.attempts).toHaveLength(2);
    expect(session.attempts[1].phrase_list_source).toBe("user-edited");
    expect(texts('[data-attempt="1"] [data-testid="phrase-token"]')).toEqual(
      session.attempts[1].phrase_list,
    );
    expect(session.attempts[1].phrase_list).toContain("home");

    // regenerate the stop for the edited attempt
    click('[data-attempt="1"] [data-testid="generate-stop"]');
    const stopNode = await until(() => document.querySelector('[data-attempt="1"] [data-testid="stop"]'));
    session = await api.getSession(sid);
    expect(stopNode.textContent).toBe(session.attempts[1].stop);

    // step through all three infills, watching the trace grow
    for (let stepCount = 1; stepCount <= 3; stepCount++) {
      click('[data-attempt="1"] [data-testid="infill-step"]');
      await until(
        () => document.querySelectorAll('[data-attempt="1"] [data-testid="trace-step"]').length === stepCount,
      );
    }
    session = await api.getSession(sid);
    expect(session.attempts[1].final_story).toHaveLength(5);
    expect(texts('[data-attempt="1"] [data-testid="sentence"]')).toEqual(session.attempts[1].final_story);
    expect(texts('[data-attempt="1"] [data-testid="trace-gap"]')).toEqual(
      session.attempts[1].trace.map((step) => `gap ${step.insert_before}`),
    );
    expect(q('[data-attempt="1"] [data-testid="progress"]').textContent).toBe("3/3 infills");
    expect(q<HTMLButtonElement>('[data-attempt="1"] [data-testid="infill-step"]').disabled).toBe(true);

    // scoring renders badges equal to the stored scores
    click('[data-attempt="1"] [data-testid="score-attempt"]');
    await until(() => document.querySelector('[data-attempt="1"] [data-metric="lexical_overlap"]'));
    session = await api.getSession(sid);
    const scores = session.attempts[1].scores!;
    for (const metric of ["lexical_overlap", "cosine_similarity", "distinct_ngrams"] as const) {
      const shown = q(`[data-attempt="1"] [data-metric="${metric}"] .badge-value`).textContent;
      expect(shown).toBe(scores[metric].toFixed(3));
    }

    // comparison board: two side-by-side columns, unfinished attempt has no badge
    expect(document.querySelectorAll('[data-testid="attempt-card"]')).toHaveLength(2);
    expect(document.querySelector('[data-attempt="0"] .badge')).toBeNull();
    expect(q('[data-testid="session-start"]').className).toContain("start-sentence");
  });

  it("complete fast-forwards the remaining infills", async () => {
    const { api } = await bootApp();
    const sid = await createSessionViaForm("A quiet library opened its doors at dawn.");

    click('[data-attempt="0"] [data-testid="generate-stop"]');
    await until(() => document.querySelector('[data-attempt="0"] [data-testid="stop"]'));
    click('[data-attempt="0"] [data-testid="infill-step"]');
    await until(() => document.querySelectorAll('[data-attempt="0"] [data-testid="trace-step"]').length === 1);

    click('[data-attempt="0"] [data-testid="infill-complete"]');
    await until(
      () => document.querySelectorAll('[data-attempt="0"] [data-testid="trace-step"]').length === 3,
    );
    const session = await api.getSession(sid);
    expect(session.attempts[0].final_story).toHaveLength(5);
    expect(texts('[data-attempt="0"] [data-testid="sentence"]')).toEqual(session.attempts[0].final_story);
  });

  it("surfaces server conflicts in the error host", async () => {
    const { api } = await bootApp();
    const sid = await createSessionViaForm("A lighthouse blinked across the bay.");

    // the stop appears out of band; the stale view's button now conflicts
    await api.generateStop(sid, 0);
    click('[data-attempt="0"] [data-testid="generate-stop"]');
    await until(() => (document.querySelector('[data-testid="error"]')?.textContent ?? "").length > 0);
    expect(q('[data-testid="error"]').textContent).toContain("stop-exists");
  });

  it("serves the static UI from the service", async () => {
    const response = await fetch(`${BASE}/`);
    expect(response.ok).toBe(true);
    const html = await response.text();
    expect(html).toContain('id="app"');
    const js = await fetch(`${BASE}/js/app.js`);
    expect(js.ok).toBe(true);
  });
});
