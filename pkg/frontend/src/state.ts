// Session console state machine. One in-flight request per view, enforced
// here: submit and undo refuse to start while a request is pending or the
// service reports busy, leaving the typed text in place with a warning
// instead of queueing a second request.

import { ApiError, StudioApi } from "./api.js";
import { parseSceneDocument } from "./preview.js";
import type {
  InstructionResult,
  MetricsSummary,
  SceneDocument,
  SessionDescribe,
  TranscriptEntryPlain,
} from "./types.js";

export const QUEUED_INPUT_WARNING =
  "service is busy; your instruction is kept in the box, submit again when idle";

export interface ConsoleState {
  sessionId: string | null;
  serviceStatus: "idle" | "busy" | "unknown";
  inFlight: boolean;
  input: string;
  warning: string | null;
  error: string | null;
  scene: SceneDocument | null;
  lastResult: InstructionResult | null;
  describe: SessionDescribe | null;
  transcript: TranscriptEntryPlain[];
  metrics: MetricsSummary | null;
}

function initialState(): ConsoleState {
  return {
    sessionId: null,
    serviceStatus: "unknown",
    inFlight: false,
    input: "",
    warning: null,
    error: null,
    scene: null,
    lastResult: null,
    describe: null,
    transcript: [],
    metrics: null,
  };
}

export type StateListener = (state: ConsoleState) => void;

export class SessionConsole {
  state: ConsoleState = initialState();

  constructor(
    private readonly api: StudioApi,
    private readonly onChange: StateListener = () => {},
  ) {}

  private update(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  setInput(text: string): void {
    this.update({ input: text });
  }

  canSubmit(): boolean {
    return (
      this.state.sessionId !== null &&
      this.state.input.trim().length > 0 &&
      !this.state.inFlight &&
      this.state.serviceStatus !== "busy"
    );
  }

  async start(seed: number): Promise<void> {
    const describe = await this.api.createSession({ backend: "mock", seed });
    this.update({
      sessionId: describe.id,
      describe,
      serviceStatus: describe.status,
      scene: null,
      lastResult: null,
      transcript: [],
      metrics: null,
      warning: null,
      error: null,
    });
    await this.refreshPanels();
  }

  async attach(sessionId: string): Promise<void> {
    const describe = await this.api.describeSession(sessionId);
    this.update({
      sessionId: describe.id,
      describe,
      serviceStatus: describe.status,
      lastResult: null,
      warning: null,
      error: null,
    });
    await this.refreshScene();
    await this.refreshPanels();
  }

  /** Submit the typed instruction. Returns true when a request was sent. */
  async submit(): Promise<boolean> {
    const text = this.state.input.trim();
    const id = this.state.sessionId;
    if (!text || id === null) return false;
    if (this.state.inFlight || this.state.serviceStatus === "busy") {
      this.update({ warning: QUEUED_INPUT_WARNING });
      return false;
    }
    this.update({ inFlight: true, warning: null, error: null });
    try {
      const result = await this.api.submitInstruction(id, text);
      this.applyResult(result, { clearInputOnSuccess: true });
    } catch (err) {
      this.applyFailure(err);
    } finally {
      this.update({ inFlight: false });
    }
    await this.refreshPanels();
    return true;
  }

  /** Undo the last instruction. Returns true when a request was sent. */
  async undo(): Promise<boolean> {
    const id = this.state.sessionId;
    if (id === null) return false;
    if (this.state.inFlight || this.state.serviceStatus === "busy") {
      this.update({ warning: QUEUED_INPUT_WARNING });
      return false;
    }
    this.update({ inFlight: true, warning: null, error: null });
    try {
      const result = await this.api.undoInstruction(id);
      this.applyResult(result, { clearInputOnSuccess: false });
    } catch (err) {
      this.applyFailure(err);
    } finally {
      this.update({ inFlight: false });
    }
    await this.refreshPanels();
    return true;
  }

  /** Poll the service-side status so a busy session disables submission. */
  async pollStatus(): Promise<void> {
    const id = this.state.sessionId;
    if (id === null || this.state.inFlight) return;
    try {
      const describe = await this.api.describeSession(id);
      this.update({ describe, serviceStatus: describe.status });
    } catch {
      this.update({ serviceStatus: "unknown" });
    }
  }

  startPolling(intervalMs: number): () => void {
    const timer = setInterval(() => {
      void this.pollStatus();
    }, intervalMs);
    return () => clearInterval(timer);
  }

  private applyResult(
    result: InstructionResult,
    options: { clearInputOnSuccess: boolean },
  ): void {
    // A document that fails validation must not replace the previous
    // frame: keep the old scene and surface the problem instead.
    try {
      const scene = parseSceneDocument(result.scene);
      this.update({
        lastResult: result,
        scene,
        serviceStatus: result.status === "busy" ? "busy" : "idle",
        input: options.clearInputOnSuccess ? "" : this.state.input,
      });
    } catch (err) {
      this.update({
        lastResult: result,
        error: err instanceof Error ? err.message : String(err),
      });
    }
  }

  private applyFailure(err: unknown): void {
    if (err instanceof ApiError && err.status === 409) {
      this.update({ warning: QUEUED_INPUT_WARNING, serviceStatus: "busy" });
      return;
    }
    this.update({ error: err instanceof Error ? err.message : String(err) });
  }

  private async refreshScene(): Promise<void> {
    const id = this.state.sessionId;
    if (id === null) return;
    try {
      const scene = parseSceneDocument(await this.api.sceneDocument(id));
      this.update({ scene });
    } catch (err) {
      this.update({ error: err instanceof Error ? err.message : String(err) });
    }
  }

  private async refreshPanels(): Promise<void> {
    const id = this.state.sessionId;
    if (id === null) return;
    try {
      const [describe, transcript, metrics] = await Promise.all([
        this.api.describeSession(id),
        this.api.transcript(id),
        this.api.metrics(id),
      ]);
      this.update({
        describe,
        serviceStatus: describe.status,
        transcript,
        metrics,
      });
    } catch {
      // Panel refresh is cosmetic; the next poll retries.
    }
  }
}
