// Thin typed client for the review service. Every request goes through
// the injected fetch so tests can stub the transport.

import type {
  CropResult,
  DecisionRequest,
  DecisionResponse,
  InspectionReport,
  InspectionSummary,
  ProposalsDoc,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function errorMessage(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { error?: string };
    if (body && typeof body.error === 'string') return body.error;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${res.status}`;
}

export class ReviewClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) throw new ApiError(res.status, await errorMessage(res));
    return (await res.json()) as T;
  }

  listInspections(): Promise<InspectionSummary[]> {
    return this.getJson('/inspections');
  }

  listProposals(inspectionId: string): Promise<ProposalsDoc> {
    return this.getJson(`/inspections/${encodeURIComponent(inspectionId)}/proposals`);
  }

  fetchReport(inspectionId: string): Promise<InspectionReport> {
    return this.getJson(`/inspections/${encodeURIComponent(inspectionId)}/report`);
  }

  async fetchCrop(proposalId: string, margin: number): Promise<CropResult> {
    const path = `/proposals/${encodeURIComponent(proposalId)}/crop?margin=${margin}`;
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) throw new ApiError(res.status, await errorMessage(res));
    const originHeader = res.headers.get('X-Crop-Origin') ?? '0,0';
    const parts = originHeader.split(',').map(Number);
    const polygon = JSON.parse(res.headers.get('X-Polygon') ?? '[]') as number[][];
    return {
      blob: await res.blob(),
      cropOrigin: [parts[0] ?? 0, parts[1] ?? 0],
      polygon,
      imageId: res.headers.get('X-Image-Id') ?? '',
    };
  }

  async submitDecision(req: DecisionRequest): Promise<DecisionResponse> {
    const path = `/proposals/${encodeURIComponent(req.proposal_id)}/decision`;
    const res = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(req),
    });
    if (!res.ok) throw new ApiError(res.status, await errorMessage(res));
    return (await res.json()) as DecisionResponse;
  }
}
