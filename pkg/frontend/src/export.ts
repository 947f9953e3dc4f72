/**
 * Mask export as binary PGM (P5), a single-channel image format with no
 * compression. Pixels are written 0 or 255 in row-major order, the same
 * convention the dataset files use, so the payload is byte-comparable
 * with the server's mask.
 */

const MAXVAL = 255;

export function encodePgm(
  mask: Uint8Array,
  width: number,
  height: number,
): Uint8Array<ArrayBuffer> {
  if (mask.length !== width * height) {
    throw new Error(`mask length ${mask.length} does not match ${width}x${height}`);
  }
  const header = `P5\n${width} ${height}\n${MAXVAL}\n`;
  const out = new Uint8Array(header.length + mask.length);
  for (let i = 0; i < header.length; i++) {
    out[i] = header.charCodeAt(i);
  }
  for (let i = 0; i < mask.length; i++) {
    out[header.length + i] = mask[i] ? 255 : 0;
  }
  return out;
}

export interface PgmImage {
  width: number;
  height: number;
  /** Raw payload bytes, 0 or 255 per pixel. */
  pixels: Uint8Array;
}

export function decodePgm(bytes: Uint8Array): PgmImage {
  // header is ASCII: magic, width, height, maxval separated by whitespace,
  // one whitespace byte before the payload
  let pos = 0;
  const token = (): string => {
    while (pos < bytes.length && isSpace(bytes[pos])) {
      pos++;
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) {
      pos++;
    }
    if (start === pos) {
      throw new Error('truncated pgm header');
    }
    return String.fromCharCode(...bytes.subarray(start, pos));
  };
  const magic = token();
  if (magic !== 'P5') {
    throw new Error(`not a binary pgm file: magic ${JSON.stringify(magic)}`);
  }
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0) || !(height > 0)) {
    throw new Error(`bad pgm dimensions ${width}x${height}`);
  }
  if (maxval !== MAXVAL) {
    throw new Error(`unsupported maxval ${maxval}`);
  }
  pos += 1; // single whitespace after maxval
  const pixels = bytes.subarray(pos);
  if (pixels.length !== width * height) {
    throw new Error(`payload is ${pixels.length} bytes, expected ${width * height}`);
  }
  return { width, height, pixels: new Uint8Array(pixels) };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x0a || byte === 0x0d || byte === 0x09;
}

export function maskFilename(sessionId: string): string {
  return `mask-${sessionId.slice(0, 8)}.pgm`;
}

export function exportBlob(mask: Uint8Array, width: number, height: number): Blob {
  const bytes = encodePgm(mask, width, height);
  return new Blob([bytes], { type: 'image/x-portable-graymap' });
}
