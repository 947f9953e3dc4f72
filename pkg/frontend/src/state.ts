/**
 * Client-side session state.
 *
 * The mask held here is always the decoded form of the last server
 * response, nothing in the UI writes mask pixels locally. Markers are
 * appended only after the matching click round trip succeeds, so after
 * every completed request they equal the server's click list. One
 * request may be in flight at a time; clicks arriving while busy are
 * dropped, not queued.
 */

import { ApiClient, ApiError, CreateSessionOptions, MaskPayload, Polarity } from './api.js';
import { decodeMaskRle } from './rle.js';

export interface Marker {
  row: number;
  col: number;
  polarity: Polarity;
}

/** applied: server accepted. dropped: busy, never sent. rejected: server said no. */
export type RequestOutcome = 'applied' | 'dropped' | 'rejected';

export type ToastFn = (message: string) => void;

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.detail;
  }
  return err instanceof Error ? err.message : String(err);
}

export class UiSession {
  readonly sessionId: string;
  readonly height: number;
  readonly width: number;

  private readonly api: ApiClient;
  private readonly toast: ToastFn;
  private maskBytes: Uint8Array;
  private markerList: Marker[] = [];
  private inFlight = false;
  private lastIou: number | null = null;
  private revCounter = 0;

  constructor(api: ApiClient, sessionId: string, height: number, width: number, toast: ToastFn) {
    this.api = api;
    this.sessionId = sessionId;
    this.height = height;
    this.width = width;
    this.toast = toast;
    this.maskBytes = new Uint8Array(height * width);
  }

  get busy(): boolean {
    return this.inFlight;
  }

  /** Bumps whenever a server response lands; cheap repaint trigger. */
  get rev(): number {
    return this.revCounter;
  }

  get iou(): number | null {
    return this.lastIou;
  }

  /** Copy of the current overlay mask, one byte per pixel, row-major. */
  get mask(): Uint8Array {
    return this.maskBytes.slice();
  }

  get markers(): readonly Marker[] {
    return this.markerList.slice();
  }

  private applyPayload(payload: MaskPayload): void {
    if (payload.height !== this.height || payload.width !== this.width) {
      throw new Error(
        `server mask is ${payload.height}x${payload.width}, session is ${this.height}x${this.width}`,
      );
    }
    this.maskBytes = decodeMaskRle(payload.mask, payload.height, payload.width);
    this.lastIou = payload.iou ?? null;
    this.revCounter += 1;
  }

  /**
   * Send one click. Drops silently when a request is already in flight;
   * on server rejection the toast fires and no marker is appended.
   */
  async click(row: number, col: number, polarity: Polarity): Promise<RequestOutcome> {
    if (this.inFlight) {
      return 'dropped';
    }
    this.inFlight = true;
    try {
      const payload = await this.api.addClick(this.sessionId, row, col, polarity);
      this.applyPayload(payload);
      this.markerList.push({ row, col, polarity });
      return 'applied';
    } catch (err) {
      this.toast(describeError(err));
      return 'rejected';
    } finally {
      this.inFlight = false;
    }
  }

  /** Mirror of POST /undo; pops the newest marker on success. */
  async undoLast(): Promise<RequestOutcome> {
    if (this.inFlight) {
      return 'dropped';
    }
    this.inFlight = true;
    try {
      const payload = await this.api.undo(this.sessionId);
      this.applyPayload(payload);
      this.markerList.pop();
      return 'applied';
    } catch (err) {
      this.toast(describeError(err));
      return 'rejected';
    } finally {
      this.inFlight = false;
    }
  }

  /** Re-pull mask and click list from the server, replacing local state. */
  async refresh(): Promise<RequestOutcome> {
    if (this.inFlight) {
      return 'dropped';
    }
    this.inFlight = true;
    try {
      const state = await this.api.getState(this.sessionId);
      this.applyPayload(state);
      this.markerList = state.clicks.map((c) => ({
        row: c.row,
        col: c.col,
        polarity: c.polarity,
      }));
      return 'applied';
    } catch (err) {
      this.toast(describeError(err));
      return 'rejected';
    } finally {
      this.inFlight = false;
    }
  }
}

/**
 * Create a server session and return its UI counterpart. The initial
 * refresh pulls the starting mask so an uploaded external mask shows up
 * before any click lands.
 */
export async function openSession(
  api: ApiClient,
  image: Blob,
  opts: CreateSessionOptions,
  toast: ToastFn,
): Promise<UiSession> {
  const info = await api.createSession(image, opts);
  const session = new UiSession(api, info.sessionId, info.height, info.width, toast);
  await session.refresh();
  return session;
}
