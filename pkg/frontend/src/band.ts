import type { RowRange } from "./types.js";

/** Parse the X-In-Focus-Rows header ("3-9,40-41", possibly empty). */
export function parseInFocusRows(header: string | null): RowRange[] {
  if (!header) return [];
  const ranges: RowRange[] = [];
  for (const part of header.split(",")) {
    const m = /^(\d+)-(\d+)$/.exec(part.trim());
    if (!m) continue;
    const a = Number(m[1]);
    const b = Number(m[2]);
    if (b >= a) ranges.push([a, b]);
  }
  return ranges;
}

/** Total number of in-focus rows covered by the ranges. */
export function rowCount(ranges: RowRange[]): number {
  return ranges.reduce((acc, [a, b]) => acc + (b - a + 1), 0);
}
