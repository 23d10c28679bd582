// Triage queue state. All state is rebuilt from service responses on
// load; the only thing that outlives a request is the idempotency id of
// an in-flight or failed submission, kept so a retry replays the same
// decision instead of creating a second one.

import { ReviewClient } from './client.js';
import type { ProposalRow, ProposalStatus } from './types.js';

export interface SubmitOutcome {
  ok: boolean;
  error?: string;
}

interface PendingSubmit {
  decisionId: string;
  verdict: 'accepted' | 'rejected';
  severity?: number;
}

export function makeDecisionId(): string {
  const c = globalThis.crypto;
  if (c && typeof c.randomUUID === 'function') return c.randomUUID();
  return `d-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

export class TriageQueue {
  items: ProposalRow[] = [];
  cursor = -1;
  inFlight = false;
  lastError: string | null = null;

  // failed submissions keyed by proposal so a retry reuses the id
  private retained = new Map<string, PendingSubmit>();

  constructor(
    private readonly client: ReviewClient,
    private readonly analystId = 'analyst',
    private readonly idFactory: () => string = makeDecisionId,
  ) {}

  async load(inspectionId: string): Promise<void> {
    const doc = await this.client.listProposals(inspectionId);
    this.items = doc.proposals;
    this.cursor = this.items.length ? 0 : -1;
    this.advanceToPending();
  }

  current(): ProposalRow | null {
    return this.cursor >= 0 ? (this.items[this.cursor] ?? null) : null;
  }

  pendingCount(): number {
    return this.items.filter((p) => p.status === 'pending').length;
  }

  next(): void {
    if (this.items.length) this.cursor = (this.cursor + 1) % this.items.length;
  }

  prev(): void {
    if (this.items.length) {
      this.cursor = (this.cursor - 1 + this.items.length) % this.items.length;
    }
  }

  /** Move the cursor forward to the nearest pending item, wrapping
   * around; leaves it alone when already on one. */
  advanceToPending(): void {
    const n = this.items.length;
    if (!n) return;
    for (let step = 0; step < n; step += 1) {
      const idx = (Math.max(this.cursor, 0) + step) % n;
      const item = this.items[idx];
      if (item && item.status === 'pending') {
        this.cursor = idx;
        return;
      }
    }
  }

  /** Accept or reject the current item. Optimistically updates the row,
   * rolls back on error, and keeps the decision id for a retry so the
   * service sees one decision no matter how often the user clicks. */
  async submit(verdict: 'accepted' | 'rejected', severity?: number): Promise<SubmitOutcome> {
    const item = this.current();
    if (!item) return { ok: false, error: 'nothing selected' };
    if (this.inFlight) return { ok: false, error: 'submission already in flight' };
    if (verdict === 'accepted') {
      if (severity === undefined) return { ok: false, error: 'accepting requires a severity' };
      if (!Number.isInteger(severity) || severity < 1 || severity > 5) {
        return { ok: false, error: 'severity must be an integer 1-5' };
      }
    }

    let pending = this.retained.get(item.proposal_id);
    if (!pending || pending.verdict !== verdict || pending.severity !== severity) {
      pending = { decisionId: this.idFactory(), verdict, severity };
    }
    this.retained.set(item.proposal_id, pending);

    const before: { status: ProposalStatus; assigned_severity: number | null } = {
      status: item.status,
      assigned_severity: item.assigned_severity,
    };
    item.status = verdict;
    item.assigned_severity = verdict === 'accepted' ? (severity as number) : null;

    this.inFlight = true;
    this.lastError = null;
    try {
      await this.client.submitDecision({
        decision_id: pending.decisionId,
        proposal_id: item.proposal_id,
        verdict,
        analyst_id: this.analystId,
        ...(verdict === 'accepted' ? { assigned_severity: severity } : {}),
      });
      this.retained.delete(item.proposal_id);
      this.advanceToPending();
      return { ok: true };
    } catch (err) {
      item.status = before.status;
      item.assigned_severity = before.assigned_severity;
      this.lastError = err instanceof Error ? err.message : String(err);
      return { ok: false, error: this.lastError };
    } finally {
      this.inFlight = false;
    }
  }
}
