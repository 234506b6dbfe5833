/** Pure HTML renderers: every control carries data- attributes the page
 * wiring reads back, so the submitted input always matches the prompt. */

import type { FinalPayload, PendingPayload, TranscriptEntry } from "./types.js";
import type { SessionView } from "./session.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderPrompt(pending: PendingPayload): string {
  switch (pending.type) {
    case "documents": {
      const rows = pending.docs
        .map(
          (d) =>
            `<li><button data-input="doc" data-value="${esc(d.id)}">${esc(d.id)}</button>` +
            ` <span class="score">${d.score.toFixed(4)}</span></li>`,
        )
        .join("");
      return (
        `<p>Is one of these documents what you are looking for?</p>` +
        `<ol class="doc-list">${rows}</ol>` +
        `<button data-input="doc" data-value="">none of these</button>`
      );
    }
    case "keyterm": {
      if (pending.term === null) {
        return `<p>No key term to offer.</p><button data-input="ack">continue</button>`;
      }
      return (
        `<p>Is <strong>${esc(pending.term)}</strong> related to what you want?</p>` +
        `<button data-input="answer" data-value="yes">yes</button>` +
        `<button data-input="answer" data-value="no">no</button>`
      );
    }
    case "request": {
      return (
        `<p>Give one more word describing what you want` +
        ` (your query: ${pending.query_terms.map(esc).join(", ")})</p>` +
        `<input type="text" data-input-field="term">` +
        `<button data-input="term">submit</button>` +
        `<button data-input="term" data-value="">skip</button>`
      );
    }
    case "topics": {
      const cards = pending.topics
        .map(
          (t) =>
            `<button class="topic-card" data-input="topic" data-value="${t.topic}">` +
            `<span class="topic-id">topic ${t.topic}</span> ${t.terms.map(esc).join(" ")}</button>`,
        )
        .join("");
      return (
        `<p>Which of these topics is closest to what you want?</p>` +
        `<div class="topic-cards">${cards}</div>` +
        `<button data-input="topic" data-value="">none of these</button>`
      );
    }
  }
}

export function renderFinal(final: FinalPayload): string {
  const rows = final.docs
    .map(
      (d, i) =>
        `<li><span class="rank">${i + 1}.</span> <a data-doc="${esc(d.id)}">${esc(d.id)}</a>` +
        ` <span class="score">${d.score.toFixed(4)}</span></li>`,
    )
    .join("");
  return `<p>Final ranked list:</p><ol class="final-list">${rows}</ol>`;
}

const ACTION_LABELS = [
  "return documents",
  "return key term",
  "return request",
  "return topics",
  "show list",
];

/** Bar display of the five Q-values; empty string hides the panel. */
export function renderQValues(qValues: number[] | undefined): string {
  if (!qValues || qValues.length !== ACTION_LABELS.length) return "";
  const max = Math.max(...qValues.map(Math.abs), 1e-12);
  const bars = qValues
    .map((q, a) => {
      const width = Math.round((Math.abs(q) / max) * 100);
      const sign = q < 0 ? "neg" : "pos";
      return (
        `<div class="q-row"><span class="q-label">${ACTION_LABELS[a]}</span>` +
        `<div class="q-bar ${sign}" style="width:${width}%"></div>` +
        `<span class="q-value">${q.toFixed(2)}</span></div>`
      );
    })
    .join("");
  return `<div class="q-panel"><p>Q-values</p>${bars}</div>`;
}

export function renderTranscript(entries: TranscriptEntry[]): string {
  if (entries.length === 0) return "";
  const rows = entries
    .map((e) => {
      const reward = e.reward === null ? "" : ` <span class="reward">${e.reward.toFixed(2)}</span>`;
      return `<li>${esc(e.action)}${reward}</li>`;
    })
    .join("");
  return `<ol class="transcript">${rows}</ol>`;
}

export function renderView(view: SessionView): string {
  switch (view.phase) {
    case "idle":
      return `<p>Enter a query to start.</p>`;
    case "busy":
      return `<p class="busy">…</p>`;
    case "error":
      return (
        `<p class="error">${esc(view.error ?? "unknown error")}</p>` +
        `<button data-retry>retry</button>`
      );
    case "terminal":
      return view.final ? renderFinal(view.final) : "";
    case "prompt":
      return view.pending ? renderPrompt(view.pending) : "";
  }
}
