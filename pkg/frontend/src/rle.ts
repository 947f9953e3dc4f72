/**
 * Run-length mask codec matching the service wire format.
 *
 * A binary mask is flattened row-major and written as comma-separated
 * run lengths of alternating value, always starting with a zero run
 * (length 0 when the first pixel is set). Examples for a 2x2 mask:
 *
 *   all zero      -> "4"
 *   all one       -> "0,4"
 *   [[1,0],[0,1]] -> "0,1,2,1"
 *
 * decode rejects anything non-canonical instead of guessing: the first
 * run is the only one allowed to be zero, and the counts must sum to
 * height*width exactly.
 */

export function encodeMaskRle(mask: Uint8Array): string {
  if (mask.length === 0) {
    throw new Error('cannot encode an empty mask');
  }
  const runs: number[] = [];
  let value = mask[0] ? 1 : 0;
  let run = 0;
  for (let i = 0; i < mask.length; i++) {
    const bit = mask[i] ? 1 : 0;
    if (bit === value) {
      run += 1;
    } else {
      runs.push(run);
      value = bit;
      run = 1;
    }
  }
  runs.push(run);
  if (mask[0]) {
    runs.unshift(0);
  }
  return runs.join(',');
}

const RUN_TOKEN = /^\d+$/;

export function decodeMaskRle(encoded: string, height: number, width: number): Uint8Array {
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1) {
    throw new Error(`bad dimensions ${height}x${width}`);
  }
  const tokens = encoded.split(',');
  const runs: number[] = [];
  for (const tok of tokens) {
    if (!RUN_TOKEN.test(tok)) {
      throw new Error(`malformed run-length string: ${JSON.stringify(tok)}`);
    }
    runs.push(parseInt(tok, 10));
  }
  for (let i = 1; i < runs.length; i++) {
    if (runs[i] <= 0) {
      throw new Error('run lengths must be positive after the leading zero run');
    }
  }
  const total = runs.reduce((a, b) => a + b, 0);
  if (total !== height * width) {
    throw new Error(`run lengths sum to ${total}, expected ${height * width}`);
  }
  const flat = new Uint8Array(height * width);
  let pos = 0;
  let value = 0;
  for (const r of runs) {
    if (value) {
      flat.fill(1, pos, pos + r);
    }
    pos += r;
    value ^= 1;
  }
  return flat;
}
