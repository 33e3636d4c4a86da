// Round trip against the real Python annotation service: the suite
// spawns it with fixture data, drives the ApiClient exactly as the UI
// does, and checks the store's append-only log on disk.

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

const serverScript = fileURLToPath(new URL('fixture_server.py', import.meta.url));

import { ApiClient, type HitView, type RawLabel } from '../src/api.js';
import { renderAdmin, renderHit } from '../src/render.js';
import { createDraft, setSelection, toSubmission } from '../src/state.js';

let server: ChildProcess;
let client: ApiClient;
let logPath: string;

beforeAll(async () => {
  logPath = join(mkdtempSync(join(tmpdir(), 'visact-ui-')), 'records.jsonl');
  server = spawn(
    'python3',
    [serverScript, '--log', logPath],
    { stdio: ['ignore', 'pipe', 'inherit'] },
  );
  const url = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('service never announced')), 15000);
    let buffer = '';
    server.stdout!.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    server.on('exit', (code) => reject(new Error(`service exited early: ${code}`)));
  });
  client = new ApiClient(url);
}, 20000);

afterAll(() => {
  server?.kill();
});

function answerAll(view: HitView, pick: (i: number) => RawLabel) {
  let draft = createDraft(view);
  draft.order.forEach((key, i) => {
    draft = setSelection(draft, key, pick(i));
  });
  return draft;
}

describe('worker round trip', () => {
  it('fetch -> label every action -> submit -> record lands in the store', async () => {
    const view = await client.fetchNextHit('worker-a');
    expect(view).not.toBeNull();
    expect(view!.miniclips).toHaveLength(5);
    for (const clip of view!.miniclips) {
      expect(clip.actions.length).toBeGreaterThan(0);
      expect(clip.actions.length).toBeLessThanOrEqual(7);
      expect('is_ground_truth' in clip).toBe(false);
    }
    // alternate labels: non-uniform and matching the fixture's gt pattern
    const draft = answerAll(view!, (i) => (i % 2 ? 'Visible' : 'NotVisible'));
    const rows = toSubmission(draft);
    expect(rows).toHaveLength(view!.miniclips.reduce((n, c) => n + c.actions.length, 0));
    const result = await client.submitLabels(view!.hit_id, 'worker-a', rows);
    expect(result).toMatchObject({ kind: 'ok' });

    const logged = readFileSync(logPath, 'utf-8').trim().split('\n').map((l) => JSON.parse(l));
    expect(logged.length).toBe(rows.length);
    expect(logged.every((r) => r.worker_id === 'worker-a')).toBe(true);
    expect(logged.every((r) => r.hit_id === view!.hit_id)).toBe(true);
  });

  it('uniform all-Visible submission comes back RejectUniform', async () => {
    const view = await client.fetchNextHit('worker-uniform');
    expect(view).not.toBeNull();
    const draft = answerAll(view!, () => 'Visible');
    const result = await client.submitLabels(view!.hit_id, 'worker-uniform', toSubmission(draft));
    expect(result).toEqual(expect.objectContaining({ kind: 'ok', verdict: 'RejectUniform' }));
  });

  it('resubmitting the same HIT yields the duplicate notice path', async () => {
    const view = await client.fetchNextHit('worker-dup');
    const draft = answerAll(view!, (i) => (i % 2 ? 'Visible' : 'NotAnAction'));
    const rows = toSubmission(draft);
    const first = await client.submitLabels(view!.hit_id, 'worker-dup', rows);
    expect(first.kind).toBe('ok');
    const second = await client.submitLabels(view!.hit_id, 'worker-dup', rows);
    expect(second.kind).toBe('duplicate');
  });

  it('renderHit consumes the live payload unchanged', async () => {
    const view = await client.fetchNextHit('worker-render');
    const html = renderHit(view!, createDraft(view!), null);
    expect((html.match(/<section class="miniclip"/g) ?? []).length).toBe(5);
    expect(html).toContain('demo action');
  });
});

describe('admin dashboard data', () => {
  it('progress counts move and kappa reaches 1.0 on the perfect fixture', async () => {
    // fixture gt pattern: even action index -> NotVisible, odd -> Visible;
    // three agreeing workers per HIT make agreement perfect
    for (const worker of ['agree-1', 'agree-2', 'agree-3']) {
      for (;;) {
        const view = await client.fetchNextHit(worker);
        if (view === null) break;
        const draft = answerAll(view, (i) => (i % 2 ? 'Visible' : 'NotVisible'));
        const result = await client.submitLabels(view.hit_id, worker, toSubmission(draft));
        expect(result).toMatchObject({ kind: 'ok', verdict: 'Accept' });
      }
    }
    const progress = await client.getProgress();
    expect(progress.hits).toBe(2);
    expect(progress.complete_hits).toBe(2);
    expect(progress.accepted_submissions).toBeGreaterThanOrEqual(6);

    const agreement = await client.getAgreement();
    expect(agreement.kappa).not.toBeNull();
    expect(agreement.kappa).toBeCloseTo(1.0, 6);

    const html = renderAdmin(progress, agreement, 0);
    expect(html).toContain('data-kappa>1.000');
  });

  it('queue drains to null once every HIT has three accepted submissions', async () => {
    expect(await client.fetchNextHit('late-worker')).toBeNull();
  });
});
