// HTML fragment builders for the side panels. Pure string -> string so
// they test without a DOM; main.ts assigns the results to innerHTML.

import type {
  FailurePlain,
  InstructionResult,
  MetricsSummary,
  SceneDocument,
  TranscriptEntryPlain,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderCountLabel(doc: SceneDocument | null): string {
  const count = doc ? doc.node_count : 0;
  return `<span class="count-label">nodes: <strong id="node-count">${count}</strong></span>`;
}

function formatValue(value: unknown): string {
  if (typeof value === "string") return value;
  return JSON.stringify(value) ?? "null";
}

export function renderDiffPanel(result: InstructionResult | null): string {
  if (!result) {
    return '<p class="placeholder">No instruction applied yet.</p>';
  }
  const badges = result.plan.selected
    .map((name) => `<span class="badge" data-function="${escapeHtml(name)}">${escapeHtml(name)}</span>`)
    .join(" ");
  const added = result.diff.added
    .map((name) => `<li class="diff-added">+ ${escapeHtml(name)}</li>`)
    .join("");
  const changed = result.diff.changed
    .map(
      (change) =>
        `<li class="diff-changed">~ ${escapeHtml(change.function)}.${escapeHtml(change.param)}: ` +
        `${escapeHtml(formatValue(change.old.value))} &rarr; ${escapeHtml(formatValue(change.new.value))}</li>`,
    )
    .join("");
  const body =
    added || changed
      ? `<ul class="diff-list">${added}${changed}</ul>`
      : '<p class="placeholder">(no changes)</p>';
  return `
    <div class="diff-plan">planned: ${badges || "<em>none</em>"}</div>
    ${body}
  `;
}

export function renderFailures(failures: FailurePlain[]): string {
  if (failures.length === 0) {
    return '<p class="placeholder">no failures</p>';
  }
  const items = failures
    .map(
      (f) =>
        `<li class="failure-badge"><code>${escapeHtml(f.kind)}</code> in ${escapeHtml(
          f.stage,
        )}${f.function ? ` (${escapeHtml(f.function)})` : ""}: ${escapeHtml(f.detail)}</li>`,
    )
    .join("");
  return `<ul class="failure-list">${items}</ul>`;
}

const STAGE_LABELS: ReadonlyArray<readonly [string, string]> = [
  ["dispatch/", "planning"],
  ["conceptualize/", "enrichment"],
  ["model/", "modeling"],
];

function stageOf(tag: string): string {
  for (const [prefix, label] of STAGE_LABELS) {
    if (tag.startsWith(prefix)) return label;
  }
  return "other";
}

export function renderTranscript(entries: TranscriptEntryPlain[]): string {
  if (entries.length === 0) {
    return '<p class="placeholder">transcript is empty</p>';
  }
  return entries
    .map((entry) => {
      const groups = new Map<string, number>();
      for (const exchange of entry.exchanges) {
        const stage = stageOf(exchange.tag);
        groups.set(stage, (groups.get(stage) ?? 0) + 1);
      }
      const counts = Array.from(groups.entries())
        .map(([stage, count]) => `${escapeHtml(stage)}&times;${count}`)
        .join(", ");
      const exchanges = entry.exchanges
        .map(
          (exchange) => `
            <details class="exchange">
              <summary><code>${escapeHtml(exchange.tag)}</code> attempt ${exchange.attempt} (${escapeHtml(exchange.backend)})</summary>
              <pre class="exchange-text">${escapeHtml(exchange.response)}</pre>
            </details>
          `,
        )
        .join("");
      return `
        <section class="transcript-entry">
          <h3>step ${entry.instruction_index} <small>${counts || "no exchanges"}</small></h3>
          ${exchanges}
          ${entry.failures.length > 0 ? renderFailures(entry.failures) : ""}
        </section>
      `;
    })
    .join("");
}

export function renderMetrics(metrics: MetricsSummary | null): string {
  if (!metrics) {
    return '<p class="placeholder">no metrics yet</p>';
  }
  const rate =
    metrics.failure_rate === null ? "n/a" : metrics.failure_rate.toFixed(3);
  return `
    <dl class="metrics">
      <dt>instructions</dt><dd>${metrics.instruction_count}</dd>
      <dt>modeling calls</dt><dd>${metrics.modeling_calls}</dd>
      <dt>failure rate</dt><dd>${rate}</dd>
      <dt>diversity</dt><dd>${metrics.diversity.toFixed(3)}</dd>
      <dt>alignment</dt><dd>${metrics.alignment.toFixed(3)}</dd>
    </dl>
  `;
}
