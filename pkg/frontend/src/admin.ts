// Admin dashboard: poll progress and agreement, flag stale data.

import { ApiClient } from './api.js';
import type { Agreement, Progress } from './api.js';
import { renderAdmin } from './render.js';

const POLL_MS = 5000;

export function startAdmin(): void {
  const client = new ApiClient('');
  const root = document.getElementById('admin-app')!;
  let progress: Progress | null = null;
  let agreement: Agreement | null = null;
  let lastSuccess: number | null = null;

  const repaint = () => {
    const stale = lastSuccess === null ? null : (Date.now() - lastSuccess) / 1000;
    root.innerHTML = renderAdmin(progress, agreement, stale);
  };

  const poll = async () => {
    try {
      [progress, agreement] = await Promise.all([
        client.getProgress(),
        client.getAgreement(),
      ]);
      lastSuccess = Date.now();
    } catch {
      // keep the stale data on screen; the badge ages it
    }
    repaint();
  };

  repaint();
  void poll();
  window.setInterval(() => void poll(), POLL_MS);
  window.setInterval(repaint, 1000);
}

if (typeof document !== 'undefined' && document.getElementById('admin-app')) {
  startAdmin();
}
