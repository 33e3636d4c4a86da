// Typed client for the annotation service; the UI talks to nothing else.

export type ActionItem = {
  action_id: string;
  text: string;
};

export type MiniclipView = {
  miniclip_id: string;
  frame_urls: string[];
  actions: ActionItem[];
};

export type HitView = {
  hit_id: string;
  miniclips: MiniclipView[];
};

export type RawLabel = 'Visible' | 'NotVisible' | 'NotAnAction';
export type Selection = RawLabel | 'Unanswered';

export type Verdict = 'Accept' | 'RejectUniform' | 'RejectLowAccuracy';

export type SubmitResult =
  | { kind: 'ok'; verdict: Verdict; accepted: number }
  | { kind: 'duplicate'; message: string };

export type Progress = {
  hits: number;
  required_submissions: number;
  accepted_submissions: number;
  rejected_submissions: number;
  complete_hits: number;
  records: number;
};

export type Agreement = {
  kappa: number | null;
  items: number;
};

export class ApiClient {
  constructor(readonly baseUrl: string = '') {}

  /** Next HIT for this worker, or null when the queue is empty. */
  async fetchNextHit(workerId: string): Promise<HitView | null> {
    const resp = await fetch(
      `${this.baseUrl}/api/hits/next?worker_id=${encodeURIComponent(workerId)}`,
    );
    if (resp.status === 204) return null;
    if (!resp.ok) throw new Error(`hit fetch failed: ${resp.status}`);
    return (await resp.json()) as HitView;
  }

  /**
   * Submit one full label set. Retries transient 5xx failures with
   * exponential backoff; a 409 comes back as a duplicate result instead
   * of an exception so the caller can show the notice.
   */
  async submitLabels(
    hitId: string,
    workerId: string,
    labels: { miniclip_id: string; action_id: string; raw_label: RawLabel }[],
    retries = 3,
    delayMs = 500,
  ): Promise<SubmitResult> {
    let lastError: Error | null = null;
    for (let attempt = 0; attempt <= retries; attempt++) {
      if (attempt > 0) {
        await new Promise((r) => setTimeout(r, delayMs * 2 ** (attempt - 1)));
      }
      let resp: Response;
      try {
        resp = await fetch(`${this.baseUrl}/api/hits/${encodeURIComponent(hitId)}/labels`, {
          method: 'POST',
          headers: { 'Content-Type': 'application/json' },
          body: JSON.stringify({ worker_id: workerId, labels }),
        });
      } catch (err) {
        lastError = err as Error;
        continue;
      }
      if (resp.status === 409) {
        const body = (await resp.json()) as { error?: string };
        return { kind: 'duplicate', message: body.error ?? 'already submitted' };
      }
      if (resp.status >= 500) {
        lastError = new Error(`server error ${resp.status}`);
        continue;
      }
      if (!resp.ok) throw new Error(`submit failed: ${resp.status}`);
      const body = (await resp.json()) as { verdict: Verdict; accepted: number };
      return { kind: 'ok', verdict: body.verdict, accepted: body.accepted };
    }
    throw lastError ?? new Error('submit failed');
  }

  async getProgress(): Promise<Progress> {
    const resp = await fetch(`${this.baseUrl}/api/progress`);
    if (!resp.ok) throw new Error(`progress failed: ${resp.status}`);
    return (await resp.json()) as Progress;
  }

  async getAgreement(): Promise<Agreement> {
    const resp = await fetch(`${this.baseUrl}/api/agreement`);
    if (!resp.ok) throw new Error(`agreement failed: ${resp.status}`);
    return (await resp.json()) as Agreement;
  }

  async fetchFrame(url: string): Promise<Uint8Array> {
    const resp = await fetch(this.baseUrl + url);
    if (!resp.ok) throw new Error(`frame failed: ${resp.status}`);
    return new Uint8Array(await resp.arrayBuffer());
  }
}
