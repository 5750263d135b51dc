/**
 * Mask overlay rendering: palette indices to premixed RGBA pixels.
 *
 * Colors come straight from the mask's embedded palette (the VOC
 * colormap the annotation files use), so overlay colors always match
 * the mask files. Pure byte-array math; the canvas layer just blits it.
 */

import type { IndexedPng } from "./maskpng.js";

/** RGBA buffer: background transparent, objects colored at `opacity`. */
export function overlayPixels(mask: IndexedPng, opacity: number): Uint8ClampedArray {
  const alpha = Math.max(0, Math.min(255, Math.round(opacity * 255)));
  const out = new Uint8ClampedArray(mask.width * mask.height * 4);
  for (let i = 0; i < mask.indices.length; i++) {
    const index = mask.indices[i];
    if (index === 0) continue;
    out[i * 4] = mask.palette[index * 3];
    out[i * 4 + 1] = mask.palette[index * 3 + 1];
    out[i * 4 + 2] = mask.palette[index * 3 + 2];
    out[i * 4 + 3] = alpha;
  }
  return out;
}

export function objectPixelCount(mask: IndexedPng, objectId: number): number {
  let count = 0;
  for (let i = 0; i < mask.indices.length; i++) {
    if (mask.indices[i] === objectId) count++;
  }
  return count;
}

export function objectColor(mask: IndexedPng, objectId: number): [number, number, number] {
  return [
    mask.palette[objectId * 3],
    mask.palette[objectId * 3 + 1],
    mask.palette[objectId * 3 + 2],
  ];
}
