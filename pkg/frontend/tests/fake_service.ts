/**
 * In-memory stand-in for the session service, speaking the same wire
 * format over a fetch-compatible function. The predictor is a toy:
 * starting from the external mask (or all zero), each click stamps a
 * Chebyshev disk of ones (positive) or zeros (negative) in order. That
 * is deterministic and polarity-sensitive, which is all the UI tests
 * need; undo restores the previous mask exactly like the real service.
 */

import { encodeMaskRle } from '../src/rle.js';
import { decodePng } from './png.js';

interface FakeClick {
  row: number;
  col: number;
  polarity: 'positive' | 'negative';
  order: number;
}

interface FakeSession {
  id: string;
  height: number;
  width: number;
  clicks: FakeClick[];
  /** history[k] is the mask after k clicks; history[0] is the base. */
  history: Uint8Array[];
  predictor: string;
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

function failure(status: number, detail: string): Response {
  return json({ detail }, status);
}

export class FakeService {
  readonly sessions = new Map<string, FakeSession>();
  readonly log: string[] = [];
  /** Next /clicks request fails with 502 before mutating anything. */
  failNextPredict = false;
  clickRadius = 3;
  private counter = 0;

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, 'http://fake');
    const method = (init?.method ?? 'GET').toUpperCase();
    this.log.push(`${method} ${url.pathname}`);
    if (method === 'GET' && url.pathname === '/health') {
      return json({ status: 'ok', sessions: this.sessions.size });
    }
    if (method === 'POST' && url.pathname === '/sessions') {
      return this.create(url, init);
    }
    let match = url.pathname.match(/^\/sessions\/([^/]+)\/clicks$/);
    if (match && method === 'POST') {
      return this.click(match[1], JSON.parse(String(init?.body)));
    }
    match = url.pathname.match(/^\/sessions\/([^/]+)\/undo$/);
    if (match && method === 'POST') {
      return this.undo(match[1]);
    }
    match = url.pathname.match(/^\/sessions\/([^/]+)\/state$/);
    if (match && method === 'GET') {
      return this.state(match[1]);
    }
    return failure(404, `no route for ${method} ${url.pathname}`);
  };

  private async create(url: URL, init?: RequestInit): Promise<Response> {
    const predictor = url.searchParams.get('predictor') ?? 'geodesic';
    if (predictor !== 'geodesic' && predictor !== 'oracle') {
      return failure(422, `unknown predictor '${predictor}'`);
    }
    const form = init?.body;
    if (!(form instanceof FormData)) {
      return failure(400, 'expected multipart body');
    }
    const image = form.get('image');
    if (!(image instanceof Blob)) {
      return failure(400, 'missing image file');
    }
    let decoded;
    try {
      decoded = decodePng(new Uint8Array(await image.arrayBuffer()));
    } catch (err) {
      return failure(400, `undecodable image: ${err}`);
    }
    const { width, height } = decoded;
    let base = new Uint8Array(height * width);
    const maskFile = form.get('mask');
    if (maskFile instanceof Blob) {
      const m = decodePng(new Uint8Array(await maskFile.arrayBuffer()));
      if (m.channels !== 1) {
        return failure(400, `mask must be single-channel, got ${m.channels}`);
      }
      if (m.width !== width || m.height !== height) {
        return failure(400, `mask is ${m.height}x${m.width}, image is ${height}x${width}`);
      }
      base = base.map((_, i) => (m.pixels[i] !== 0 ? 1 : 0));
    }
    const id = `fake-${++this.counter}`;
    this.sessions.set(id, {
      id,
      height,
      width,
      clicks: [],
      history: [base],
      predictor,
    });
    return json({ session_id: id, height, width });
  }

  private stamp(session: FakeSession, mask: Uint8Array, click: FakeClick): Uint8Array {
    const out = mask.slice();
    const value = click.polarity === 'positive' ? 1 : 0;
    const r = this.clickRadius;
    for (let row = Math.max(0, click.row - r); row <= Math.min(session.height - 1, click.row + r); row++) {
      for (let col = Math.max(0, click.col - r); col <= Math.min(session.width - 1, click.col + r); col++) {
        out[row * session.width + col] = value;
      }
    }
    return out;
  }

  private payload(session: FakeSession): Response {
    return json({
      mask: encodeMaskRle(session.history[session.history.length - 1]),
      height: session.height,
      width: session.width,
    });
  }

  private click(
    id: string,
    body: { row: number; col: number; polarity: 'positive' | 'negative' },
  ): Response {
    const session = this.sessions.get(id);
    if (!session) {
      return failure(404, `unknown session ${id}`);
    }
    if (!(body.row >= 0 && body.row < session.height && body.col >= 0 && body.col < session.width)) {
      return failure(
        400,
        `click (${body.row}, ${body.col}) outside ${session.height}x${session.width}`,
      );
    }
    if (this.failNextPredict) {
      this.failNextPredict = false;
      return failure(502, 'predictor failed: injected fault');
    }
    const click: FakeClick = { ...body, order: session.clicks.length };
    const next = this.stamp(session, session.history[session.history.length - 1], click);
    session.clicks.push(click);
    session.history.push(next);
    return this.payload(session);
  }

  private undo(id: string): Response {
    const session = this.sessions.get(id);
    if (!session) {
      return failure(404, `unknown session ${id}`);
    }
    if (session.clicks.length === 0) {
      return failure(409, 'nothing to undo');
    }
    session.clicks.pop();
    session.history.pop();
    return this.payload(session);
  }

  private state(id: string): Response {
    const session = this.sessions.get(id);
    if (!session) {
      return failure(404, `unknown session ${id}`);
    }
    return json({
      mask: encodeMaskRle(session.history[session.history.length - 1]),
      height: session.height,
      width: session.width,
      clicks: session.clicks.map((c) => ({ ...c })),
      predictor: session.predictor,
    });
  }
}
