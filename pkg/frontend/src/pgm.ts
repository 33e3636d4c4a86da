// Minimal binary PGM (P5, maxval 255) decoder: the service sends raw
// frame files and browsers cannot display PGM natively, so the UI paints
// decoded pixels onto a canvas.

export type GrayFrame = {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major, width * height
};

export function decodePgm(data: Uint8Array): GrayFrame {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x35) {
    throw new Error('not a P5 PGM file');
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos]!)) pos++;
    if (pos < data.length && data[pos] === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    const start = pos;
    while (pos < data.length && !isSpace(data[pos]!)) pos++;
    if (start === pos) throw new Error('truncated PGM header');
    fields.push(parseInt(ascii(data, start, pos), 10));
  }
  pos++; // the single whitespace byte after maxval
  const [width, height, maxval] = fields as [number, number, number];
  if (!Number.isFinite(width) || !Number.isFinite(height) || maxval !== 255) {
    throw new Error(`bad PGM header: ${width}x${height} maxval ${maxval}`);
  }
  const expected = width * height;
  const body = data.subarray(pos, pos + expected);
  if (body.length !== expected) {
    throw new Error(`expected ${expected} pixels, got ${body.length}`);
  }
  return { width, height, pixels: new Uint8Array(body) };
}

/** Expand grayscale to the RGBA layout ImageData wants. */
export function toRgba(frame: GrayFrame): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(frame.width * frame.height * 4));
  for (let i = 0; i < frame.pixels.length; i++) {
    const v = frame.pixels[i]!;
    out[i * 4] = v;
    out[i * 4 + 1] = v;
    out[i * 4 + 2] = v;
    out[i * 4 + 3] = 255;
  }
  return out;
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

function ascii(data: Uint8Array, start: number, end: number): string {
  let s = '';
  for (let i = start; i < end; i++) s += String.fromCharCode(data[i]!);
  return s;
}
