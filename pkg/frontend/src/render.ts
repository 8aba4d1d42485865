/**
 * DOM rendering: one pure pass from UiSessionState to the wizard root.
 *
 * Node texts from the knowledge base are always assigned through
 * textContent, never rewritten or re-formatted, so what the engineer
 * reads is byte-equal to what the knowledge base says. Cost hints render
 * as small badges on the answer buttons and are never auto-selected.
 */

import type { Crumb, FindingView, SessionView } from "./api.js";
import { hintScore, orderedAnswers, type UiSessionState } from "./state.js";

export interface WizardHandlers {
  onAnswer(label: string): void;
  onAcknowledge(): void;
  onAbort(): void;
  onRetry(): void;
  onSubmitRecord(): void;
  onRestart(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  document: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(
  root: HTMLElement,
  state: UiSessionState,
  handlers: WizardHandlers,
): void {
  const document = root.ownerDocument;
  root.textContent = "";

  if (state.errorBanner !== null) {
    const banner = el(document, "div", "error-banner");
    banner.setAttribute("data-testid", "error-banner");
    banner.append(el(document, "span", "error-text", state.errorBanner));
    const retry = el(document, "button", "retry", "Retry");
    retry.setAttribute("data-testid", "retry");
    retry.addEventListener("click", handlers.onRetry);
    banner.append(retry);
    root.append(banner);
  }

  const view = state.view;
  if (!view) {
    root.append(el(document, "p", "empty", "No active session."));
    return;
  }

  root.append(renderBreadcrumb(document, view.breadcrumb));

  const card = el(document, "section", "card");
  card.setAttribute("data-testid", "card");
  card.setAttribute("data-status", view.status);

  if (view.status === "active" && view.prompt) {
    renderPrompt(document, card, state, handlers);
  } else if (view.status === "finished_finding" && view.finding) {
    renderFinding(document, card, view.finding, state, handlers);
  } else {
    const title = view.status === "finished_ok" ? "Finished" : "Session aborted";
    card.append(el(document, "h2", "card-title", title));
    const restart = el(document, "button", "restart", "Start a new session");
    restart.setAttribute("data-testid", "restart");
    restart.addEventListener("click", handlers.onRestart);
    card.append(restart);
  }

  root.append(card);

  if (view.stack_depth > 0) {
    root.append(
      el(document, "p", "stack-depth", `Subtree depth: ${view.stack_depth}`),
    );
  }
}

function renderBreadcrumb(document: Document, crumbs: Crumb[]): HTMLElement {
  const nav = el(document, "nav", "breadcrumb");
  nav.setAttribute("data-testid", "breadcrumb");
  let currentTree: string | null = null;
  for (const crumb of crumbs) {
    if (crumb.tree !== currentTree) {
      currentTree = crumb.tree;
      const divider = el(document, "span", "crumb-tree", crumb.tree);
      divider.setAttribute("data-testid", "crumb-tree");
      nav.append(divider);
    }
    const step = el(document, "span", "crumb", crumb.text);
    step.setAttribute("data-testid", "crumb");
    nav.append(step);
  }
  return nav;
}

function renderPrompt(
  document: Document,
  card: HTMLElement,
  state: UiSessionState,
  handlers: WizardHandlers,
): void {
  const view = state.view as SessionView;
  const prompt = view.prompt!;

  card.append(el(document, "p", "prompt-kind", prompt.kind));
  const title = el(document, "h2", "card-title", prompt.text);
  title.setAttribute("data-testid", "prompt-text");
  card.append(title);
  if (prompt.context_note) {
    const note = el(document, "p", "context-note", prompt.context_note);
    note.setAttribute("data-testid", "context-note");
    card.append(note);
  }

  const controls = el(document, "div", "controls");
  if (prompt.kind === "decision") {
    if (prompt.answers.length === 0) {
      card.append(
        el(
          document,
          "p",
          "dead-end",
          "This branch has no continuation in the knowledge base.",
        ),
      );
    }
    for (const label of orderedAnswers(view)) {
      const button = el(document, "button", "answer");
      button.setAttribute("data-testid", "answer");
      button.setAttribute("data-answer", label);
      button.disabled = state.pending;
      button.append(el(document, "span", "answer-label", label));
      const score = hintScore(view, label);
      if (score !== null) {
        const badge = el(document, "span", "cost-badge", `cost ${score}`);
        badge.setAttribute("data-testid", "cost-badge");
        button.append(badge);
      }
      button.addEventListener("click", () => handlers.onAnswer(label));
      controls.append(button);
    }
  } else {
    const button = el(document, "button", "acknowledge", "Continue");
    button.setAttribute("data-testid", "acknowledge");
    button.disabled = state.pending;
    button.addEventListener("click", handlers.onAcknowledge);
    controls.append(button);
  }

  const abort = el(document, "button", "abort", "Abort session");
  abort.setAttribute("data-testid", "abort");
  abort.disabled = state.pending;
  abort.addEventListener("click", handlers.onAbort);
  controls.append(abort);
  card.append(controls);
}

function renderFinding(
  document: Document,
  card: HTMLElement,
  finding: FindingView,
  state: UiSessionState,
  handlers: WizardHandlers,
): void {
  card.append(el(document, "p", "prompt-kind", "finding"));
  const title = el(document, "h2", "card-title", finding.text);
  title.setAttribute("data-testid", "finding-text");
  card.append(title);
  if (finding.context_note) {
    card.append(el(document, "p", "context-note", finding.context_note));
  }

  const mode = finding.mode;
  if (mode) {
    card.append(el(document, "h3", "mode-name", `${mode.name} [${mode.area}]`));
    const badges = el(document, "div", "badges");
    const dims: Array<[string, string]> = [
      ["operational_impact", mode.operational_impact],
      ["time_cost", mode.time_cost],
      ["disturbance_risk", mode.disturbance_risk],
    ];
    for (const [dim, level] of dims) {
      const badge = el(document, "span", `badge badge-${level.toLowerCase()}`, level);
      badge.setAttribute("data-testid", `badge-${dim}`);
      badge.title = mode.effects[dim] ?? "";
      badges.append(badge);
    }
    card.append(badges);
    const intervention = el(document, "p", "intervention", mode.intervention);
    intervention.setAttribute("data-testid", "intervention");
    card.append(intervention);
    card.append(el(document, "p", "definition", mode.definition));
  } else {
    card.append(
      el(document, "p", "mode-name", "No cataloged failure mode is linked."),
    );
  }

  if (state.recordSubmitted) {
    const done = el(document, "p", "record-done", "Fault record submitted.");
    done.setAttribute("data-testid", "record-submitted");
    card.append(done);
  } else {
    const submit = el(document, "button", "submit-record", "Log this fault");
    submit.setAttribute("data-testid", "submit-record");
    submit.disabled = state.pending;
    submit.addEventListener("click", handlers.onSubmitRecord);
    card.append(submit);
  }

  const restart = el(document, "button", "restart", "Start a new session");
  restart.setAttribute("data-testid", "restart");
  restart.addEventListener("click", handlers.onRestart);
  card.append(restart);
}
