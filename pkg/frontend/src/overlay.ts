/**
 * Pure pixel helpers for the canvas view. Nothing here touches the DOM,
 * so the blend and the coordinate mapping stay unit-testable.
 */

import { Polarity } from './api.js';
import { Marker } from './state.js';

export const MASK_ALPHA = 0.5;

/** Overlay tint for masked pixels. */
export const MASK_COLOR: readonly [number, number, number] = [30, 144, 255];

export const POSITIVE_COLOR = '#22c55e';
export const NEGATIVE_COLOR = '#ef4444';

/**
 * Blend the mask into an RGBA buffer at MASK_ALPHA, in place. Unmasked
 * pixels are left untouched; alpha is forced opaque on masked ones.
 */
export function blendMask(
  rgba: Uint8ClampedArray,
  mask: Uint8Array,
  color: readonly [number, number, number] = MASK_COLOR,
): void {
  if (rgba.length !== mask.length * 4) {
    throw new Error(`rgba length ${rgba.length} does not match mask length ${mask.length}`);
  }
  for (let i = 0; i < mask.length; i++) {
    if (!mask[i]) {
      continue;
    }
    const o = i * 4;
    rgba[o] = Math.round(rgba[o] * (1 - MASK_ALPHA) + color[0] * MASK_ALPHA);
    rgba[o + 1] = Math.round(rgba[o + 1] * (1 - MASK_ALPHA) + color[1] * MASK_ALPHA);
    rgba[o + 2] = Math.round(rgba[o + 2] * (1 - MASK_ALPHA) + color[2] * MASK_ALPHA);
    rgba[o + 3] = 255;
  }
}

export interface MarkerStyle {
  fill: string;
  label: '+' | '-';
}

export function markerStyle(marker: Pick<Marker, 'polarity'>): MarkerStyle {
  return marker.polarity === 'positive'
    ? { fill: POSITIVE_COLOR, label: '+' }
    : { fill: NEGATIVE_COLOR, label: '-' };
}

export function polarityForEvent(button: number, modifier: boolean): Polarity {
  // right button or any modifier key means negative
  return button === 2 || modifier ? 'negative' : 'positive';
}

export interface PixelCoord {
  row: number;
  col: number;
}

/**
 * Map a point in display coordinates to an image pixel by flooring the
 * scale transform. Returns null outside the image so out-of-range
 * clicks never reach the server (whose bounds check uses the same
 * convention).
 */
export function canvasToPixel(
  x: number,
  y: number,
  displayWidth: number,
  displayHeight: number,
  imageWidth: number,
  imageHeight: number,
): PixelCoord | null {
  if (displayWidth <= 0 || displayHeight <= 0) {
    return null;
  }
  const col = Math.floor((x * imageWidth) / displayWidth);
  const row = Math.floor((y * imageHeight) / displayHeight);
  if (row < 0 || row >= imageHeight || col < 0 || col >= imageWidth) {
    return null;
  }
  return { row, col };
}
