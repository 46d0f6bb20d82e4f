/** The eight canonical f-stop presets, ascending. A free-entry field can
 * supply any other positive value. */
export const APERTURE_STOPS = [1.8, 2.8, 4, 5.6, 8, 11, 16, 22] as const;

export interface ControlState {
  fNumber: number;
  /** Depth units; bound to the session's depth range. */
  focusDistance: number;
  focusScale: number;
  focalLengthMm: number;
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

export interface SessionMeta {
  sessionId: string;
  width: number;
  height: number;
  channels: number;
  depthMin: number;
  depthMax: number;
  defaultFocusDistance: number;
  focusSource: string;
  histogram: Histogram;
}

/** A row range [start, end], both inclusive. */
export type RowRange = readonly [number, number];

export interface RenderView {
  blob: Blob;
  state: ControlState;
  seq: number;
  energy: number;
  focusDistance: number;
  focusSource: string;
  cocMinPx: number;
  cocMeanPx: number;
  cocMaxPx: number;
  inFocusRows: RowRange[];
}

export interface SweepResult {
  fNumbers: number[];
  energies: number[];
  blurMonotonicity: number;
  inFocusRows: RowRange[][];
  /** Decoded PNG frames, ascending f-number. */
  frames: Blob[];
}
