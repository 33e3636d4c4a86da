// Worker view wiring: fetch a HIT, paint frames, collect labels, submit.
// One submission in flight at a time; the draft lives in localStorage
// until the service accepts or rejects it.

import { ApiClient } from './api.js';
import type { HitView, RawLabel } from './api.js';
import { decodePgm, toRgba } from './pgm.js';
import {
  SHORTCUTS,
  clearDraft,
  createDraft,
  firstUnanswered,
  isComplete,
  loadDraft,
  nextKey,
  saveDraft,
  setSelection,
  toSubmission,
  unansweredCount,
  type Draft,
} from './state.js';
import {
  renderDuplicateNotice,
  renderEmptyQueue,
  renderHit,
  renderOfflineBanner,
  renderSubmitBar,
  renderVerdict,
} from './render.js';

type App = {
  client: ApiClient;
  workerId: string;
  view: HitView | null;
  draft: Draft | null;
  focused: string | null;
  inFlight: boolean;
};

function workerIdFromUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const given = params.get('worker_id');
  if (given) return given;
  const stored = window.localStorage.getItem('visact-worker-id');
  if (stored) return stored;
  const fresh = `w-${Math.random().toString(36).slice(2, 10)}`;
  window.localStorage.setItem('visact-worker-id', fresh);
  return fresh;
}

function paint(app: App): void {
  const root = document.getElementById('app')!;
  const banner = document.getElementById('banner')!;
  banner.innerHTML = renderOfflineBanner(false);
  if (app.view === null || app.draft === null) {
    root.innerHTML = renderEmptyQueue();
    return;
  }
  root.innerHTML =
    renderHit(app.view, app.draft, app.focused) +
    renderSubmitBar(unansweredCount(app.draft), app.inFlight);
  wireEvents(app, root);
  void paintFrames(app, root);
}

async function paintFrames(app: App, root: HTMLElement): Promise<void> {
  if (app.view === null) return;
  for (const clip of app.view.miniclips) {
    const panel = root.querySelector<HTMLElement>(
      `[data-miniclip="${CSS.escape(clip.miniclip_id)}"]`,
    );
    if (!panel || clip.frame_urls.length === 0) continue;
    const canvas = panel.querySelector<HTMLCanvasElement>('[data-frame-canvas]')!;
    const scrub = panel.querySelector<HTMLInputElement>('[data-scrub]')!;
    const pos = panel.querySelector<HTMLElement>('[data-frame-pos]')!;
    const show = async (index: number) => {
      const url = clip.frame_urls[index];
      if (!url) return;
      try {
        const frame = decodePgm(await app.client.fetchFrame(url));
        canvas.width = frame.width;
        canvas.height = frame.height;
        const ctx = canvas.getContext('2d')!;
        ctx.putImageData(new ImageData(toRgba(frame), frame.width, frame.height), 0, 0);
        pos.textContent = `${index + 1}/${clip.frame_urls.length}`;
      } catch {
        pos.textContent = 'frame unavailable';
      }
    };
    scrub.addEventListener('input', () => void show(Number(scrub.value)));
    await show(0);
  }
}

function wireEvents(app: App, root: HTMLElement): void {
  for (const button of root.querySelectorAll<HTMLButtonElement>('button[data-key]')) {
    button.addEventListener('click', () => {
      applyLabel(app, button.dataset.key!, button.dataset.label as RawLabel);
    });
  }
  for (const row of root.querySelectorAll<HTMLElement>('[data-action-row]')) {
    row.addEventListener('click', () => {
      app.focused = row.dataset.actionRow!;
      paint(app);
    });
  }
  const submit = root.querySelector<HTMLButtonElement>('[data-submit]');
  submit?.addEventListener('click', () => void submitDraft(app));
}

function applyLabel(app: App, key: string, label: RawLabel): void {
  if (app.draft === null) return;
  app.draft = setSelection(app.draft, key, label);
  saveDraft(window.localStorage, app.draft);
  const following = nextKey(app.draft, key);
  app.focused =
    following && app.draft.selections[following] === 'Unanswered'
      ? following
      : firstUnanswered(app.draft);
  paint(app);
}

async function submitDraft(app: App): Promise<void> {
  if (app.view === null || app.draft === null || app.inFlight) return;
  if (!isComplete(app.draft)) return;
  app.inFlight = true;
  paint(app);
  const root = document.getElementById('app')!;
  try {
    const result = await app.client.submitLabels(
      app.view.hit_id,
      app.workerId,
      toSubmission(app.draft),
    );
    clearDraft(window.localStorage, app.view.hit_id);
    root.innerHTML =
      result.kind === 'ok' ? renderVerdict(result.verdict) : renderDuplicateNotice();
    app.inFlight = false;
    window.setTimeout(() => void loadNext(app), 1500);
  } catch {
    // network failure or exhausted retries: keep the draft, show the banner
    app.inFlight = false;
    document.getElementById('banner')!.innerHTML = renderOfflineBanner(true);
    paint(app);
  }
}

async function loadNext(app: App): Promise<void> {
  try {
    const view = await app.client.fetchNextHit(app.workerId);
    app.view = view;
    if (view === null) {
      app.draft = null;
    } else {
      app.draft = loadDraft(window.localStorage, view) ?? createDraft(view);
      saveDraft(window.localStorage, app.draft);
      app.focused = firstUnanswered(app.draft);
    }
    paint(app);
  } catch {
    document.getElementById('banner')!.innerHTML = renderOfflineBanner(true);
    window.setTimeout(() => void loadNext(app), 2000);
  }
}

export function start(): void {
  const app: App = {
    client: new ApiClient(''),
    workerId: workerIdFromUrl(),
    view: null,
    draft: null,
    focused: null,
    inFlight: false,
  };
  document.addEventListener('keydown', (event) => {
    const label = SHORTCUTS[event.key];
    if (label && app.focused && app.draft) applyLabel(app, app.focused, label);
  });
  void loadNext(app);
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  start();
}
