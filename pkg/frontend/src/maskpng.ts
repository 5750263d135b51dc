/**
 * Minimal indexed-PNG decoder for the server's mask files.
 *
 * The service always writes 8-bit, color-type-3 (palette), non-interlaced
 * PNGs, so this covers exactly that profile. Works in browsers and node
 * via DecompressionStream; one decode path for the app and the tests.
 */

export interface IndexedPng {
  width: number;
  height: number;
  /** Row-major palette indices, one byte per pixel. */
  indices: Uint8Array;
  /** 256 RGB triplets (768 bytes, zero-padded if the file had fewer). */
  palette: Uint8Array;
}

const PNG_SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

async function inflate(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data as BlobPart])
    .stream()
    .pipeThrough(new DecompressionStream("deflate"));
  const buffer = await new Response(stream).arrayBuffer();
  return new Uint8Array(buffer);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

/** Undo PNG scanline filters for 1-byte-per-pixel images. */
function unfilter(raw: Uint8Array, width: number, height: number): Uint8Array {
  const stride = width + 1;
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * stride];
    const row = y * width;
    const prev = (y - 1) * width;
    for (let x = 0; x < width; x++) {
      const value = raw[y * stride + 1 + x];
      const left = x > 0 ? out[row + x - 1] : 0;
      const up = y > 0 ? out[prev + x] : 0;
      const upLeft = x > 0 && y > 0 ? out[prev + x - 1] : 0;
      let reconstructed: number;
      switch (filter) {
        case 0:
          reconstructed = value;
          break;
        case 1:
          reconstructed = value + left;
          break;
        case 2:
          reconstructed = value + up;
          break;
        case 3:
          reconstructed = value + ((left + up) >> 1);
          break;
        case 4:
          reconstructed = value + paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`unsupported PNG filter ${filter} on row ${y}`);
      }
      out[row + x] = reconstructed & 0xff;
    }
  }
  return out;
}

export async function decodeIndexedPng(data: ArrayBuffer | Uint8Array): Promise<IndexedPng> {
  const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
  for (let i = 0; i < PNG_SIGNATURE.length; i++) {
    if (bytes[i] !== PNG_SIGNATURE[i]) throw new Error("not a PNG file");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let pos = 8;
  let width = 0;
  let height = 0;
  const palette = new Uint8Array(768);
  const idatParts: Uint8Array[] = [];
  while (pos < bytes.length) {
    const length = view.getUint32(pos);
    const type = String.fromCharCode(bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]);
    const body = bytes.subarray(pos + 8, pos + 8 + length);
    if (type === "IHDR") {
      width = view.getUint32(pos + 8);
      height = view.getUint32(pos + 12);
      const bitDepth = bytes[pos + 16];
      const colorType = bytes[pos + 17];
      const interlace = bytes[pos + 20];
      if (bitDepth !== 8 || colorType !== 3 || interlace !== 0) {
        throw new Error(
          `unsupported PNG profile (depth ${bitDepth}, color ${colorType}, interlace ${interlace}); ` +
            "expected 8-bit non-interlaced palette",
        );
      }
    } else if (type === "PLTE") {
      palette.set(body.subarray(0, Math.min(768, body.length)));
    } else if (type === "IDAT") {
      idatParts.push(body);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + length;
  }
  if (!width || !height) throw new Error("PNG missing IHDR");
  const compressed = new Uint8Array(idatParts.reduce((n, p) => n + p.length, 0));
  let offset = 0;
  for (const part of idatParts) {
    compressed.set(part, offset);
    offset += part.length;
  }
  const raw = await inflate(compressed);
  if (raw.length !== (width + 1) * height) {
    throw new Error(`decompressed ${raw.length} bytes, expected ${(width + 1) * height}`);
  }
  return { width, height, indices: unfilter(raw, width, height), palette };
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const binary = atob(b64);
    const out = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export async function decodeMaskB64(b64: string): Promise<IndexedPng> {
  return decodeIndexedPng(base64ToBytes(b64));
}
