// Typed client for the scenefuse HTTP API. All state shown in the UI is
// whatever these calls return; nothing is fabricated client-side.

import type {
  JobTicket,
  PlacementResponse,
  PlacementSpec,
  PromptResponse,
  ResultResponse,
  SessionView,
  StageName,
  UploadResponse,
  VariantList,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
    message?: string,
  ) {
    super(message ?? `HTTP ${status}: ${JSON.stringify(detail)}`);
    this.name = 'ApiError';
  }

  /** Server-suggested valid placement on a 422, when present. */
  clampedPlacement(): PlacementSpec | null {
    if (
      this.status === 422 &&
      typeof this.detail === 'object' &&
      this.detail !== null &&
      'clamped' in (this.detail as Record<string, unknown>)
    ) {
      return (this.detail as { clamped: PlacementSpec }).clamped;
    }
    return null;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail: unknown = null;
      try {
        const body = (await response.json()) as Record<string, unknown>;
        detail = body.detail ?? body;
      } catch {
        detail = await response.text().catch(() => null);
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private json(body: unknown): RequestInit {
    return {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    };
  }

  createSession(config: Record<string, unknown> = {}): Promise<SessionView> {
    return this.request('/sessions', this.json({ config }));
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`);
  }

  uploadAsset(id: string, kind: 'object' | 'background', bytes: ArrayBuffer | Uint8Array | Blob): Promise<UploadResponse> {
    return this.request(`/sessions/${id}/assets?kind=${kind}`, {
      method: 'POST',
      headers: { 'content-type': 'application/octet-stream' },
      body: bytes as BodyInit,
    });
  }

  async fetchAsset(id: string, ref: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${id}/assets/${ref}`);
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return response.arrayBuffer();
  }

  assetUrl(id: string, ref: string): string {
    return `${this.baseUrl}/sessions/${id}/assets/${ref}`;
  }

  putPlacement(id: string, spec: Omit<PlacementSpec, 'canvas_size'> & { canvas_size?: [number, number] }): Promise<PlacementResponse> {
    return this.request(`/sessions/${id}/placement`, {
      ...this.json(spec),
      method: 'PUT',
    });
  }

  putPrompt(id: string, slots: { product_type: string; color: string; place: string }): Promise<PromptResponse> {
    return this.request(`/sessions/${id}/prompt`, {
      ...this.json(slots),
      method: 'PUT',
    });
  }

  runStage(id: string, stage: StageName, k: number): Promise<JobTicket> {
    return this.request(`/sessions/${id}/stages/${stage}?k=${k}`, { method: 'POST' });
  }

  runAll(id: string): Promise<JobTicket> {
    return this.request(`/sessions/${id}/run_all`, { method: 'POST' });
  }

  getJob(ticketId: string): Promise<JobTicket> {
    return this.request(`/jobs/${ticketId}`);
  }

  listVariants(id: string, stage: StageName): Promise<VariantList> {
    return this.request(`/sessions/${id}/variants/${stage}`);
  }

  selectVariant(id: string, stage: StageName, index: number): Promise<SessionView> {
    return this.request(`/sessions/${id}/variants/${stage}/select`, this.json({ index }));
  }

  getResult(id: string): Promise<ResultResponse> {
    return this.request(`/sessions/${id}/result`);
  }
}
