/**
 * Binary PPM (P6, 8-bit) encode/decode used to exchange images with the CLI.
 *
 * Quantization matches the core's writer: round(sample * 255) with ties to
 * even, computed in double precision.
 */

import type { BoundImage } from "./types.js";

/** round-half-to-even of a non-negative double */
function roundTiesToEven(x: number): number {
  const floor = Math.floor(x);
  const frac = x - floor;
  if (frac > 0.5) return floor + 1;
  if (frac < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

export function quantize(image: BoundImage): Uint8Array {
  const n = image.height * image.width * 3;
  if (image.data.length !== n) {
    throw new RangeError(
      `image buffer has ${image.data.length} samples, expected ${n}`,
    );
  }
  const out = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    const v = image.data[i];
    if (!(v >= 0 && v <= 1)) {
      throw new RangeError(`sample ${i} = ${v} outside [0, 1]`);
    }
    out[i] = roundTiesToEven(v * 255);
  }
  return out;
}

export function encodePpm(image: BoundImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(quantize(image))]);
}

export function decodePpm(data: Buffer): BoundImage {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x36) {
    throw new Error("not a binary PPM (P6) stream");
  }
  // header: three whitespace-separated tokens (width, height, maxval),
  // '#' comments allowed, single whitespace byte after maxval
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    while (pos < data.length && isSpace(data[pos])) pos++;
    if (pos < data.length && data[pos] === 0x23 /* '#' */) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos++;
    if (pos === start) throw new Error("truncated PPM header");
    tokens.push(parseInt(data.subarray(start, pos).toString("ascii"), 10));
  }
  pos++; // the single whitespace byte after maxval
  const [width, height, maxval] = tokens;
  if (!(width > 0 && height > 0) || (maxval !== 255 && maxval !== 65535)) {
    throw new Error(`bad PPM header: ${width}x${height} maxval ${maxval}`);
  }
  const n = width * height * 3;
  const bytesPerSample = maxval === 255 ? 1 : 2;
  if (data.length < pos + n * bytesPerSample) {
    throw new Error("truncated PPM pixel data");
  }
  const out = new Float32Array(n);
  if (maxval === 255) {
    for (let i = 0; i < n; i++) out[i] = data[pos + i] / 255;
  } else {
    for (let i = 0; i < n; i++) {
      out[i] = data.readUInt16BE(pos + 2 * i) / 65535;
    }
  }
  return { height, width, data: out };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}
