// Pure DOM construction from server state. Every value shown here comes
// straight from a session response; re-rendering from a fresh GET must
// reproduce the exact same view.

import type { Attempt, Session, TraceStep } from "./api.js";

export interface Handlers {
  onDraftAdd(attempt: number, token: string): void;
  onDraftRemove(attempt: number, position: number): void;
  onDraftMove(attempt: number, position: number, delta: number): void;
  onDraftSubmit(attempt: number): void;
  onGenerateStop(attempt: number): void;
  onStep(attempt: number): void;
  onComplete(attempt: number): void;
  onScore(attempt: number): void;
}

export interface ViewState {
  session: Session;
  drafts: Map<number, string[]>;
  draftErrors: Map<number, string>;
  busy: boolean;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function badge(label: string, value: number | null): HTMLElement {
  return el("span", { class: "badge", "data-metric": label }, [
    el("span", { class: "badge-label" }, [label]),
    el("span", { class: "badge-value" }, [value === null ? "--" : value.toFixed(3)]),
  ]);
}

function sentenceList(attempt: Attempt, session: Session): HTMLElement {
  const rows = attempt.sentences.map((text, index) => {
    const classes = ["sentence"];
    if (index === 0) classes.push("start-sentence");
    if (index === attempt.sentences.length - 1 && attempt.stop !== null) classes.push("stop-sentence");
    return el("li", { class: classes.join(" "), "data-testid": "sentence" }, [text]);
  });
  const list = el("ol", { class: "story", "data-testid": "story" }, rows);
  if (attempt.sentences.length === 0) {
    list.append(el("li", { class: "placeholder" }, [`start: ${session.start}`]));
  }
  return list;
}

function traceView(trace: TraceStep[]): HTMLElement {
  const steps = trace.map((step, index) =>
    el("li", { class: "trace-step", "data-testid": "trace-step" }, [
      el("span", { class: "trace-gap", "data-testid": "trace-gap" }, [`gap ${step.insert_before}`]),
      el("span", { class: "trace-sentence" }, [step.sentence]),
      el(
        "span",
        { class: "trace-scores" },
        step.scores.map((score) =>
          el("span", { class: "gap-score", "data-testid": "gap-score" }, [
            `${score.insert_before}: ${score.probability.toFixed(3)}`,
          ]),
        ),
      ),
      el("span", { class: "trace-index" }, [`#${index + 1}`]),
    ]),
  );
  return el("ol", { class: "trace", "data-testid": "trace" }, steps);
}

function phraseChips(tokens: string[]): HTMLElement {
  return el(
    "div",
    { class: "phrase-list", "data-testid": "phrase-list" },
    tokens.length
      ? tokens.map((token) => el("span", { class: "chip", "data-testid": "phrase-token" }, [token]))
      : [el("span", { class: "placeholder" }, ["(empty phrase list)"])],
  );
}

function draftEditor(attempt: Attempt, view: ViewState, handlers: Handlers): HTMLElement {
  const draft = view.drafts.get(attempt.index) ?? attempt.phrase_list;
  const error = view.draftErrors.get(attempt.index);
  const chips = draft.map((token, position) =>
    el("span", { class: "chip draft-chip", "data-testid": "draft-token" }, [
      token,
      button("↑", "move-up", () => handlers.onDraftMove(attempt.index, position, -1), position === 0),
      button(
        "↓",
        "move-down",
        () => handlers.onDraftMove(attempt.index, position, 1),
        position === draft.length - 1,
      ),
      button("×", "remove-token", () => handlers.onDraftRemove(attempt.index, position), false),
    ]),
  );
  const input = el("input", {
    class: "token-input",
    "data-testid": "token-input",
    placeholder: "add token",
  });
  const add = button("Add", "add-token", () => {
    handlers.onDraftAdd(attempt.index, (input as HTMLInputElement).value);
    (input as HTMLInputElement).value = "";
  });
  const submit = button("Submit as new attempt", "submit-phrase-list", () =>
    handlers.onDraftSubmit(attempt.index),
  );
  const parts: (Node | string)[] = [el("div", { class: "draft-chips" }, chips), input, add, submit];
  if (error) {
    parts.push(el("div", { class: "inline-error", "data-testid": "draft-error" }, [error]));
  }
  return el("div", { class: "editor", "data-testid": "editor" }, parts);

  function button(label: string, testid: string, onClick: () => void, disabled = false): HTMLButtonElement {
    const node = el("button", { class: testid, "data-testid": testid }, [label]);
    if (disabled || view.busy) node.disabled = true;
    node.addEventListener("click", onClick);
    return node;
  }
}

function actionButton(
  label: string,
  testid: string,
  onClick: () => void,
  disabled: boolean,
): HTMLButtonElement {
  const node = el("button", { class: testid, "data-testid": testid }, [label]);
  node.disabled = disabled;
  node.addEventListener("click", onClick);
  return node;
}

function attemptCard(attempt: Attempt, view: ViewState, handlers: Handlers): HTMLElement {
  const { session } = view;
  const n = session.config.n;
  const complete = attempt.final_story !== null;
  const canStep = session.scheme === "lm" && attempt.stop !== null && !complete;
  const stepsDone = attempt.trace.length;
  const totalSteps = Math.max(n - 2, 0);

  const header = el("header", { class: "attempt-header" }, [
    el("strong", {}, [`Attempt ${attempt.index}`]),
    el("span", { class: `source source-${attempt.phrase_list_source}`, "data-testid": "source" }, [
      attempt.phrase_list_source,
    ]),
  ]);

  const stopRow = el("div", { class: "stop-row" }, [
    attempt.stop === null
      ? actionButton("Generate stop", "generate-stop", () => handlers.onGenerateStop(attempt.index), view.busy)
      : el("span", { class: "stop-sentence", "data-testid": "stop" }, [attempt.stop]),
  ]);

  const stepper = el("div", { class: "stepper" }, [
    el("span", { class: "progress", "data-testid": "progress" }, [`${stepsDone}/${totalSteps} infills`]),
    actionButton("Step", "infill-step", () => handlers.onStep(attempt.index), !canStep || view.busy),
    actionButton("Complete", "infill-complete", () => handlers.onComplete(attempt.index), view.busy || complete || attempt.stop === null),
  ]);

  const scores = attempt.scores;
  const scoreRow = el("div", { class: "score-row", "data-testid": "scores" }, scores
    ? [
        badge("lexical_overlap", scores.lexical_overlap),
        badge("cosine_similarity", scores.cosine_similarity),
        badge("syntax_similarity", scores.syntax_similarity),
        badge("distinct_ngrams", scores.distinct_ngrams),
      ]
    : [actionButton("Score", "score-attempt", () => handlers.onScore(attempt.index), view.busy || !complete)]);

  const warnings = attempt.warnings.length
    ? [el("div", { class: "warnings", "data-testid": "warnings" }, [attempt.warnings.join("; ")])]
    : [];

  return el("article", { class: "attempt-card", "data-testid": "attempt-card", "data-attempt": String(attempt.index) }, [
    header,
    phraseChips(attempt.phrase_list),
    draftEditor(attempt, view, handlers),
    stopRow,
    sentenceList(attempt, session),
    traceView(attempt.trace),
    stepper,
    scoreRow,
    ...warnings,
  ]);
}

export function renderSession(view: ViewState, handlers: Handlers): HTMLElement {
  const { session } = view;
  return el("section", { class: "session", "data-testid": "session", "data-session-id": session.id }, [
    el("header", { class: "session-header" }, [
      el("h2", {}, [
        "Start: ",
        el("span", { class: "start-sentence", "data-testid": "session-start" }, [session.start]),
      ]),
      el("span", { class: "meta" }, [
        `scheme ${session.scheme} · n=${session.config.n} · seed ${session.config.seed} · ${session.attempts.length} attempt(s)`,
      ]),
    ]),
    el(
      "div",
      { class: "board", "data-testid": "board" },
      session.attempts.map((attempt) => attemptCard(attempt, view, handlers)),
    ),
  ]);
}
