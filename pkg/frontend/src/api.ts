/**
 * Thin typed client for the clickseg session service.
 *
 * Endpoints:
 *   GET  /health
 *   POST /sessions              multipart image (+ optional mask, gt files)
 *   POST /sessions/{id}/clicks  JSON {row, col, polarity}
 *   POST /sessions/{id}/undo
 *   GET  /sessions/{id}/state
 *
 * Masks travel as run-length strings (see rle.ts). Errors come back as
 * JSON {detail} with 4xx/5xx status and are rethrown as ApiError so the
 * caller can toast the detail without caring about the transport.
 */

export type Polarity = 'positive' | 'negative';

export interface SessionInfo {
  sessionId: string;
  height: number;
  width: number;
}

export interface MaskPayload {
  mask: string;
  height: number;
  width: number;
  iou?: number;
}

export interface ServerClick {
  row: number;
  col: number;
  polarity: Polarity;
  order: number;
}

export interface SessionState extends MaskPayload {
  clicks: ServerClick[];
  predictor: string;
}

export interface CreateSessionOptions {
  /** External mask to correct, single-channel image file. */
  mask?: Blob;
  /** Ground truth upload; enables per-click IoU and the oracle predictor. */
  gt?: Blob;
  predictor?: string;
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = 'ApiError';
    this.status = status;
    this.detail = detail;
  }
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

async function readError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText || 'request failed';
  try {
    const body = await resp.json();
    if (body && typeof body.detail === 'string') {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body, keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchFn;

  constructor(baseUrl = '', fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
    // bind the global so browsers don't reject fetch called off-window
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      throw await readError(resp);
    }
    return resp;
  }

  async health(): Promise<{ status: string; sessions: number }> {
    const resp = await this.request('/health');
    return resp.json();
  }

  async createSession(image: Blob, opts: CreateSessionOptions = {}): Promise<SessionInfo> {
    const form = new FormData();
    form.append('image', image, 'image.png');
    if (opts.mask) {
      form.append('mask', opts.mask, 'mask.png');
    }
    if (opts.gt) {
      form.append('gt', opts.gt, 'gt.png');
    }
    const query = opts.predictor ? `?predictor=${encodeURIComponent(opts.predictor)}` : '';
    const resp = await this.request(`/sessions${query}`, { method: 'POST', body: form });
    const body = await resp.json();
    return { sessionId: body.session_id, height: body.height, width: body.width };
  }

  async addClick(
    sessionId: string,
    row: number,
    col: number,
    polarity: Polarity,
  ): Promise<MaskPayload> {
    const resp = await this.request(`/sessions/${sessionId}/clicks`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ row, col, polarity }),
    });
    return resp.json();
  }

  async undo(sessionId: string): Promise<MaskPayload> {
    const resp = await this.request(`/sessions/${sessionId}/undo`, { method: 'POST' });
    return resp.json();
  }

  async getState(sessionId: string): Promise<SessionState> {
    const resp = await this.request(`/sessions/${sessionId}/state`);
    return resp.json();
  }
}
