// Pure renderers: HTML strings as a function of (HitView, Draft) or the
// admin payloads. No DOM access here, which keeps them snapshot-testable.

import type { Agreement, HitView, Progress, Selection, Verdict } from './api.js';
import type { Draft } from './state.js';
import { draftKey } from './state.js';

const LABELS: { value: Selection; caption: string; key: string }[] = [
  { value: 'Visible', caption: 'Visible', key: '1' },
  { value: 'NotVisible', caption: 'Not visible', key: '2' },
  { value: 'NotAnAction', caption: 'Not an action', key: '3' },
];

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}

export function renderHit(view: HitView, draft: Draft, focusedKey: string | null): string {
  const panels = view.miniclips
    .map((clip) => {
      const frameCount = clip.frame_urls.length;
      const strip = `
      <div class="strip" data-miniclip="${escapeHtml(clip.miniclip_id)}">
        <canvas width="160" height="160" data-frame-canvas></canvas>
        <input type="range" min="0" max="${Math.max(0, frameCount - 1)}" value="0"
               data-scrub aria-label="scrub frames" ${frameCount <= 1 ? 'disabled' : ''}>
        <span class="frame-pos" data-frame-pos>1/${frameCount}</span>
      </div>`;
      const rows = clip.actions
        .map((action) => {
          const key = draftKey(clip.miniclip_id, action.action_id);
          const selected = draft.selections[key] ?? 'Unanswered';
          const buttons = LABELS.map(
            (label) => `
            <button type="button" data-key="${escapeHtml(key)}" data-label="${label.value}"
                    class="${selected === label.value ? 'picked' : ''}"
                    title="shortcut ${label.key}">${label.caption}</button>`,
          ).join('');
          const focus = key === focusedKey ? ' focused' : '';
          const answered = selected !== 'Unanswered' ? ' answered' : '';
          return `
          <li class="action${focus}${answered}" data-action-row="${escapeHtml(key)}">
            <span class="text">${escapeHtml(action.text)}</span>
            <span class="choices">${buttons}</span>
          </li>`;
        })
        .join('');
      return `
    <section class="miniclip" data-panel="${escapeHtml(clip.miniclip_id)}">
      <h3>${escapeHtml(clip.miniclip_id)}</h3>
      ${strip}
      <ol class="actions">${rows}</ol>
    </section>`;
    })
    .join('');
  return `
  <div class="hit" data-hit="${escapeHtml(view.hit_id)}">
    <header>
      <h2>${escapeHtml(view.hit_id)}</h2>
      <p class="hint">1 = visible, 2 = not visible, 3 = not an action</p>
    </header>
    ${panels}
  </div>`;
}

export function renderSubmitBar(unanswered: number, inFlight: boolean): string {
  const disabled = unanswered > 0 || inFlight ? 'disabled' : '';
  const note =
    unanswered > 0
      ? `${unanswered} action${unanswered === 1 ? '' : 's'} left to label`
      : inFlight
        ? 'submitting…'
        : 'all actions labeled';
  return `
  <div class="submit-bar">
    <span class="note">${note}</span>
    <button type="button" data-submit ${disabled}>Submit</button>
  </div>`;
}

export function renderVerdict(verdict: Verdict): string {
  const text: Record<Verdict, string> = {
    Accept: 'Submission accepted, thank you. Loading the next task…',
    RejectUniform:
      'Submission rejected: the same label was given to every action in all miniclips.',
    RejectLowAccuracy:
      'Submission rejected: answers disagree too strongly with the reference labels.',
  };
  const cls = verdict === 'Accept' ? 'ok' : 'rejected';
  return `<div class="verdict ${cls}" data-verdict="${verdict}">${text[verdict]}</div>`;
}

export function renderDuplicateNotice(): string {
  return '<div class="verdict rejected" data-verdict="duplicate">' +
    'You already submitted this task; loading the next one.</div>';
}

export function renderEmptyQueue(): string {
  return '<div class="empty-queue">No tasks remain. You are done.</div>';
}

export function renderOfflineBanner(visible: boolean): string {
  return visible
    ? '<div class="offline-banner" role="alert">Connection lost — retrying…</div>'
    : '';
}

export function renderAdmin(
  progress: Progress | null,
  agreement: Agreement | null,
  staleSeconds: number | null,
): string {
  const stale =
    staleSeconds !== null && staleSeconds > 30
      ? `<span class="stale-badge">data ${Math.round(staleSeconds)}s old</span>`
      : '';
  const kappa =
    agreement === null || agreement.kappa === null
      ? 'not yet defined'
      : agreement.kappa.toFixed(3);
  const rows = progress
    ? `
    <tr><td>HITs</td><td>${progress.hits}</td></tr>
    <tr><td>Accepted submissions</td><td>${progress.accepted_submissions} / ${progress.required_submissions}</td></tr>
    <tr><td>Rejected submissions</td><td>${progress.rejected_submissions}</td></tr>
    <tr><td>Complete HITs</td><td>${progress.complete_hits}</td></tr>
    <tr><td>Accepted records</td><td>${progress.records}</td></tr>`
    : '<tr><td colspan="2">loading…</td></tr>';
  return `
  <div class="admin">
    <h2>Annotation progress ${stale}</h2>
    <table>${rows}</table>
    <p class="kappa">Fleiss kappa over accepted records:
      <strong data-kappa>${kappa}</strong>
      ${agreement ? `<span class="items">(${agreement.items} items)</span>` : ''}
    </p>
  </div>`;
}
