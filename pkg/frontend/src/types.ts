// Payload shapes mirrored from the session service HTTP API. The view
// derives everything from these; no scene logic happens client-side.

export interface TypedValuePlain {
  kind: string;
  value: unknown;
}

export interface TransformPlain {
  position: number[];
  scale: number;
  yaw: number;
}

export interface GeometryPlain {
  shape: string;
  vertices: number;
  faces: number;
  params: Record<string, unknown>;
}

export interface SceneNodePlain {
  id: string;
  kind: string;
  source: string;
  transform: TransformPlain;
  geometry: GeometryPlain | null;
  attributes: Record<string, TypedValuePlain>;
}

export interface SceneDocument {
  format?: number;
  content_hash?: string;
  seed: number;
  bounds: number[][];
  node_count: number;
  nodes: SceneNodePlain[];
}

export interface DispatchPlanPlain {
  instruction_index: number;
  selected: string[];
  rationale: string;
}

export interface DiffChange {
  function: string;
  param: string;
  old: TypedValuePlain;
  new: TypedValuePlain;
}

export interface ProgramDiff {
  added: string[];
  removed: string[];
  changed: DiffChange[];
}

export interface FailurePlain {
  stage: string;
  kind: string;
  detail: string;
  attempt: number;
  instruction_index: number;
  function: string | null;
}

export interface InstructionResult {
  session_id: string;
  instruction_index: number;
  status: string;
  plan: DispatchPlanPlain;
  delta: unknown;
  diff: ProgramDiff;
  diff_summary: string[];
  failures: FailurePlain[];
  scene: SceneDocument;
}

export interface SessionTogglesPlain {
  skip_enrichment: boolean;
  skip_planning: boolean;
}

export interface SessionConfigPlain {
  backend: string;
  seed: number;
  toggles: SessionTogglesPlain;
  registry_path: string | null;
  cassette_path: string | null;
}

export interface SessionDescribe {
  id: string;
  status: "idle" | "busy";
  config: SessionConfigPlain;
  instructions: string[];
  instruction_count: number;
  program_hash: string;
  functions: string[];
  failure_count: number;
}

export interface ExchangePlain {
  tag: string;
  attempt: number;
  fingerprint: string;
  system: string;
  user: string;
  response: string;
  backend: string;
}

export interface TranscriptEntryPlain {
  instruction_index: number;
  scene: string;
  exchanges: ExchangePlain[];
  failures: FailurePlain[];
}

export interface MetricsSummary {
  failure_rate: number | null;
  modeling_calls: number;
  diversity: number;
  alignment: number;
  instruction_count: number;
}

export type Color = [number, number, number];
