/**
 * DOM wiring for the annotation page. All session logic lives in
 * state.ts; this file only moves pixels and events around.
 */

import { ApiClient } from './api.js';
import { exportBlob, maskFilename } from './export.js';
import { blendMask, canvasToPixel, markerStyle, polarityForEvent } from './overlay.js';
import { openSession, UiSession } from './state.js';

const api = new ApiClient('');

let session: UiSession | null = null;
let baseImage: ImageData | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const canvas = el<HTMLCanvasElement>('view');
const imageInput = el<HTMLInputElement>('image-input');
const maskInput = el<HTMLInputElement>('mask-input');
const startButton = el<HTMLButtonElement>('start');
const undoButton = el<HTMLButtonElement>('undo');
const exportButton = el<HTMLButtonElement>('export');
const statusLine = el<HTMLElement>('status');
const toastBox = el<HTMLElement>('toasts');

function toast(message: string): void {
  const node = document.createElement('div');
  node.className = 'toast';
  node.textContent = message;
  toastBox.appendChild(node);
  setTimeout(() => node.remove(), 4000);
}

function updateStatus(): void {
  if (!session) {
    statusLine.textContent = 'no session';
    return;
  }
  let text = `${session.markers.length} click${session.markers.length === 1 ? '' : 's'}`;
  if (session.iou !== null) {
    text += ` | IoU ${session.iou.toFixed(3)}`;
  }
  statusLine.textContent = text;
  canvas.classList.toggle('busy', session.busy);
}

function repaint(): void {
  if (!session || !baseImage) {
    return;
  }
  const ctx = canvas.getContext('2d');
  if (!ctx) {
    return;
  }
  const frame = new ImageData(
    new Uint8ClampedArray(baseImage.data),
    baseImage.width,
    baseImage.height,
  );
  blendMask(frame.data, session.mask);
  ctx.putImageData(frame, 0, 0);

  const radius = Math.max(2, Math.round(session.width / 48));
  for (const marker of session.markers) {
    const style = markerStyle(marker);
    ctx.beginPath();
    ctx.arc(marker.col + 0.5, marker.row + 0.5, radius, 0, Math.PI * 2);
    ctx.fillStyle = style.fill;
    ctx.fill();
    ctx.lineWidth = Math.max(1, radius / 3);
    ctx.strokeStyle = '#ffffff';
    ctx.stroke();
  }
  updateStatus();
}

async function startSession(): Promise<void> {
  const imageFile = imageInput.files?.[0];
  if (!imageFile) {
    toast('pick an image first');
    return;
  }
  const maskFile = maskInput.files?.[0];
  try {
    const bitmap = await createImageBitmap(imageFile);
    session = await openSession(api, imageFile, maskFile ? { mask: maskFile } : {}, toast);
    canvas.width = session.width;
    canvas.height = session.height;
    const ctx = canvas.getContext('2d');
    if (!ctx) {
      throw new Error('canvas 2d context unavailable');
    }
    ctx.drawImage(bitmap, 0, 0, session.width, session.height);
    baseImage = ctx.getImageData(0, 0, session.width, session.height);
    repaint();
  } catch (err) {
    session = null;
    baseImage = null;
    toast(err instanceof Error ? err.message : String(err));
    updateStatus();
  }
}

async function handlePointer(event: MouseEvent): Promise<void> {
  event.preventDefault();
  if (!session) {
    return;
  }
  const rect = canvas.getBoundingClientRect();
  const pixel = canvasToPixel(
    event.clientX - rect.left,
    event.clientY - rect.top,
    rect.width,
    rect.height,
    session.width,
    session.height,
  );
  if (!pixel) {
    return;
  }
  const modifier = event.ctrlKey || event.altKey || event.metaKey || event.shiftKey;
  const polarity = polarityForEvent(event.button, modifier);
  updateStatus();
  const outcome = await session.click(pixel.row, pixel.col, polarity);
  if (outcome === 'applied') {
    repaint();
  } else {
    updateStatus();
  }
}

canvas.addEventListener('click', handlePointer);
canvas.addEventListener('contextmenu', handlePointer);

startButton.addEventListener('click', () => void startSession());

undoButton.addEventListener('click', async () => {
  if (!session) {
    return;
  }
  const outcome = await session.undoLast();
  if (outcome === 'applied') {
    repaint();
  }
});

exportButton.addEventListener('click', () => {
  if (!session) {
    toast('no mask to export');
    return;
  }
  const blob = exportBlob(session.mask, session.width, session.height);
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = maskFilename(session.sessionId);
  link.click();
  URL.revokeObjectURL(link.href);
});

updateStatus();
