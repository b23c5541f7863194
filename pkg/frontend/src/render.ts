import { BatchView } from "./batchView.js";
import { CurveView } from "./curveView.js";
import { RunPayload } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Status header: run progress plus the current state-machine phase. */
export function renderStatus(run: RunPayload): string {
  return (
    `<header class="status status-${run.status.toLowerCase()}">` +
    `<span class="phase">${run.status}</span>` +
    `<span class="progress">iteration ${run.iteration}/${run.total_iterations}, ` +
    `${run.n_labelled} labelled, ${run.remaining_tasks} tasks open</span>` +
    `</header>`
  );
}

/** Pair cards in API order, with match / non-match / skip controls. */
export function renderBatch(view: BatchView): string {
  const cards = view.cards
    .map(
      (card) =>
        `<div class="card card-${card.decision}" data-task="${escapeHtml(card.taskId)}">` +
        `<div class="names"><span>${escapeHtml(card.nameA)}</span>` +
        `<span>${escapeHtml(card.nameB)}</span></div>` +
        `<div class="meta">uncertainty ${card.uncertainty.toFixed(3)}</div>` +
        `<div class="controls">` +
        `<button data-action="match">Match (m)</button>` +
        `<button data-action="non-match">Non-match (n)</button>` +
        `<button data-action="skip">Skip (s)</button>` +
        `</div></div>`
    )
    .join("");
  const submit = view.readyToSubmit
    ? `<button class="submit" data-action="submit">Submit batch</button>`
    : `<div class="pending-note">${view.remaining} pair(s) still pending</div>`;
  return `<section class="batch">${cards}${submit}</section>`;
}

/** Inline SVG line chart of the BA series vs |X_l| on a log x-axis. */
export function renderCurves(view: CurveView, width = 640, height = 320): string {
  if (view.empty) {
    return `<section class="curves empty">no history yet</section>`;
  }
  const xMin = Math.log10(Math.max(1, Math.min(...view.xTicks)));
  const xMax = Math.log10(Math.max(...view.xTicks));
  const span = xMax - xMin || 1;
  const sx = (x: number) => ((Math.log10(Math.max(1, x)) - xMin) / span) * (width - 40) + 30;
  const sy = (y: number) => height - 20 - y * (height - 40);

  const paths = view.series
    .map((series, k) => {
      const points = series.points
        .filter((p): p is { x: number; y: number } => p.y !== null)
        .map((p) => `${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
        .join(" ");
      return (
        `<polyline fill="none" class="series series-${k}" ` +
        `data-name="${escapeHtml(series.name)}" points="${points}"/>`
      );
    })
    .join("");
  const ticks = view.xTicks
    .map((x) => `<text x="${sx(x).toFixed(1)}" y="${height - 4}">${x}</text>`)
    .join("");
  return (
    `<section class="curves"><svg viewBox="0 0 ${width} ${height}">` +
    `${paths}${ticks}</svg></section>`
  );
}
