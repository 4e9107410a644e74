// DOM bootstrap: wires the state machine to the static shell and repaints
// on every state change. All data flows through StudioApi; this file only
// moves strings and pixels.

import { StudioApi } from "./api.js";
import { paintPreview } from "./painter.js";
import {
  renderCountLabel,
  renderDiffPanel,
  renderFailures,
  renderMetrics,
  renderTranscript,
} from "./panels.js";
import { buildPreviewModel } from "./preview.js";
import { SessionConsole, type ConsoleState } from "./state.js";

const POLL_INTERVAL_MS = 1500;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function bootstrap(): void {
  const input = element<HTMLTextAreaElement>("instruction-input");
  const submitBtn = element<HTMLButtonElement>("submit-btn");
  const undoBtn = element<HTMLButtonElement>("undo-btn");
  const newSessionBtn = element<HTMLButtonElement>("new-session-btn");
  const seedInput = element<HTMLInputElement>("seed-input");
  const sessionLabel = element<HTMLElement>("session-label");
  const statusBadge = element<HTMLElement>("status-badge");
  const countHolder = element<HTMLElement>("count-holder");
  const warningPanel = element<HTMLElement>("warning-panel");
  const errorPanel = element<HTMLElement>("error-panel");
  const diffPanel = element<HTMLElement>("diff-panel");
  const failurePanel = element<HTMLElement>("failure-panel");
  const transcriptPanel = element<HTMLElement>("transcript-panel");
  const metricsPanel = element<HTMLElement>("metrics-panel");
  const canvas = element<HTMLCanvasElement>("preview-canvas");

  const api = new StudioApi("");
  const consoleView = new SessionConsole(api, render);

  function render(state: ConsoleState): void {
    sessionLabel.textContent = state.sessionId ?? "no session";
    statusBadge.textContent = state.inFlight ? "submitting" : state.serviceStatus;
    statusBadge.className = `status-badge status-${state.inFlight ? "busy" : state.serviceStatus}`;

    if (input.value !== state.input) input.value = state.input;
    submitBtn.disabled = !consoleView.canSubmit();
    undoBtn.disabled =
      state.sessionId === null || state.inFlight || state.serviceStatus === "busy";

    warningPanel.textContent = state.warning ?? "";
    warningPanel.hidden = state.warning === null;
    errorPanel.textContent = state.error ?? "";
    errorPanel.hidden = state.error === null;

    countHolder.innerHTML = renderCountLabel(state.scene);
    diffPanel.innerHTML = renderDiffPanel(state.lastResult);
    failurePanel.innerHTML = renderFailures(state.lastResult?.failures ?? []);
    transcriptPanel.innerHTML = renderTranscript(state.transcript);
    metricsPanel.innerHTML = renderMetrics(state.metrics);

    paintPreview(canvas, state.scene ? buildPreviewModel(state.scene) : null);
  }

  input.addEventListener("input", () => consoleView.setInput(input.value));
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && (event.ctrlKey || event.metaKey)) {
      event.preventDefault();
      void consoleView.submit();
    }
  });
  submitBtn.addEventListener("click", () => void consoleView.submit());
  undoBtn.addEventListener("click", () => void consoleView.undo());
  newSessionBtn.addEventListener("click", () => {
    const seed = Number.parseInt(seedInput.value, 10);
    void consoleView.start(Number.isFinite(seed) ? seed : 0);
  });

  consoleView.startPolling(POLL_INTERVAL_MS);
  render(consoleView.state);
  void consoleView.start(42);
}

document.addEventListener("DOMContentLoaded", bootstrap);
