import { expect, test } from 'vitest';

import { ApiClient, Polarity } from '../src/api.js';
import { decodePgm, encodePgm } from '../src/export.js';
import { blendMask } from '../src/overlay.js';
import { decodeMaskRle } from '../src/rle.js';
import { openSession, UiSession } from '../src/state.js';
import { FakeService } from './fake_service.js';
import { demoImagePng } from './png.js';

/**
 * Round-trip fidelity for the scripted scenario: three positive clicks,
 * one negative, undo, re-click, export. After every completed request
 * the overlay mask and the markers must match what the server reports,
 * and the exported file must equal the server's state mask byte for
 * byte.
 */

async function expectMirrorsServer(session: UiSession, api: ApiClient): Promise<void> {
  const state = await api.getState(session.sessionId);
  const serverMask = decodeMaskRle(state.mask, state.height, state.width);
  expect(Array.from(session.mask)).toEqual(Array.from(serverMask));
  expect(session.markers.map((m) => [m.row, m.col, m.polarity])).toEqual(
    state.clicks.map((c) => [c.row, c.col, c.polarity]),
  );
}

test('scripted scenario: clicks, undo, re-click, export matches server bytes', async () => {
  const service = new FakeService();
  const api = new ApiClient('http://svc', service.fetch);
  const toasts: string[] = [];
  const session = await openSession(api, demoImagePng(), {}, (m) => toasts.push(m));
  await expectMirrorsServer(session, api);

  const area = () => session.mask.reduce((a, b) => a + b, 0);

  // three positives growing the overlay, then a negative carving into it
  const script: Array<[number, number, Polarity]> = [
    [8, 8, 'positive'],
    [12, 12, 'positive'],
    [16, 15, 'positive'],
  ];
  for (const [row, col, polarity] of script) {
    expect(await session.click(row, col, polarity)).toBe('applied');
    await expectMirrorsServer(session, api);
  }
  const areaAfterPositives = area();
  expect(areaAfterPositives).toBeGreaterThan(0);

  expect(await session.click(10, 10, 'negative')).toBe('applied');
  await expectMirrorsServer(session, api);
  expect(area()).toBeLessThan(areaAfterPositives);
  expect(session.markers.length).toBe(4);

  // undo restores the pre-negative overlay exactly
  expect(await session.undoLast()).toBe('applied');
  await expectMirrorsServer(session, api);
  expect(area()).toBe(areaAfterPositives);
  expect(session.markers.length).toBe(3);

  // re-click somewhere else
  expect(await session.click(9, 11, 'negative')).toBe('applied');
  await expectMirrorsServer(session, api);
  expect(area()).toBeLessThan(areaAfterPositives);

  // exported file equals the server state mask byte for byte
  const exported = encodePgm(session.mask, session.width, session.height);
  const state = await api.getState(session.sessionId);
  const serverMask = decodeMaskRle(state.mask, state.height, state.width);
  const expected = Uint8Array.from(serverMask, (v) => v * 255);
  const decoded = decodePgm(exported);
  expect(decoded.width).toBe(state.width);
  expect(decoded.height).toBe(state.height);
  expect(Buffer.from(decoded.pixels).equals(Buffer.from(expected))).toBe(true);

  expect(toasts).toEqual([]);
});

test('overlay pixels derive from the server mask alone', async () => {
  const service = new FakeService();
  const api = new ApiClient('http://svc', service.fetch);
  const session = await openSession(api, demoImagePng(), {}, () => {});
  await session.click(12, 12, 'positive');

  const size = session.height * session.width;
  const rgba = new Uint8ClampedArray(size * 4).fill(80);
  blendMask(rgba, session.mask);

  const state = await api.getState(session.sessionId);
  const serverMask = decodeMaskRle(state.mask, state.height, state.width);
  for (let i = 0; i < size; i++) {
    const blended = rgba[i * 4] !== 80 || rgba[i * 4 + 3] === 255;
    expect(blended).toBe(serverMask[i] === 1);
  }
});

test('export of an untouched session is an all-zero file', async () => {
  const service = new FakeService();
  const api = new ApiClient('http://svc', service.fetch);
  const session = await openSession(api, demoImagePng(), {}, () => {});
  const { pixels } = decodePgm(encodePgm(session.mask, session.width, session.height));
  expect(pixels.every((v) => v === 0)).toBe(true);
});
