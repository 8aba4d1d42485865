/**
 * Wizard state: the last server view plus purely local UI flags.
 *
 * The server view is never edited locally; the screen is a pure function
 * of this state, so replacing the view with a fresh GET of the same
 * session reproduces the identical screen.
 */

import type { SessionView } from "./api.js";

export interface UiSessionState {
  view: SessionView | null;
  /** a request is in flight; inputs are disabled */
  pending: boolean;
  /** text of the error banner, or null when healthy */
  errorBanner: string | null;
  /** the finding's fault record has been submitted */
  recordSubmitted: boolean;
}

export function initialState(): UiSessionState {
  return { view: null, pending: false, errorBanner: null, recordSubmitted: false };
}

export function withView(state: UiSessionState, view: SessionView): UiSessionState {
  return { ...state, view, pending: false, errorBanner: null };
}

export function withPending(state: UiSessionState): UiSessionState {
  return { ...state, pending: true, errorBanner: null };
}

export function withError(state: UiSessionState, message: string): UiSessionState {
  return { ...state, pending: false, errorBanner: message };
}

export function withRecordSubmitted(state: UiSessionState): UiSessionState {
  return { ...state, pending: false, recordSubmitted: true };
}

/**
 * Answer labels in display order: the service's ranked hints when they
 * cover every answer, declaration order otherwise. Never invents or
 * drops a transition.
 */
export function orderedAnswers(view: SessionView): string[] {
  const prompt = view.prompt;
  if (!prompt) return [];
  if (view.hints && view.hints.length === prompt.answers.length) {
    const ranked = view.hints.map((h) => h.label);
    const sameSet =
      ranked.length === prompt.answers.length &&
      prompt.answers.every((a) => ranked.includes(a));
    if (sameSet) return ranked;
  }
  return [...prompt.answers];
}

export function hintScore(view: SessionView, label: string): number | null {
  const hint = view.hints?.find((h) => h.label === label);
  return hint ? hint.score : null;
}
