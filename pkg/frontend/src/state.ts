import type { ControlState, SessionMeta } from "./types.js";

/** Defaults for a freshly loaded session: widest preset stop, the server's
 * predicted focus distance, neutral scale, 50 mm. */
export function defaultControlState(meta: SessionMeta): ControlState {
  return {
    fNumber: 1.8,
    focusDistance: meta.defaultFocusDistance,
    focusScale: 1.0,
    focalLengthMm: 50.0,
  };
}

/** Mirror of the lens parameter invariants, with the focus slider clamped
 * to the session's depth histogram bounds. Invalid numbers fall back to the
 * previous value. */
export function clampControlState(
  state: ControlState,
  meta: SessionMeta,
  previous: ControlState,
): ControlState {
  const pick = (value: number, fallback: number, min = 1e-6) =>
    Number.isFinite(value) && value >= min ? value : fallback;
  const fd = Number.isFinite(state.focusDistance)
    ? Math.min(Math.max(state.focusDistance, meta.depthMin), meta.depthMax)
    : previous.focusDistance;
  return {
    fNumber: pick(state.fNumber, previous.fNumber),
    focusDistance: fd,
    focusScale: pick(state.focusScale, previous.focusScale),
    focalLengthMm: pick(state.focalLengthMm, previous.focalLengthMm),
  };
}

export function sameState(a: ControlState, b: ControlState): boolean {
  return (
    a.fNumber === b.fNumber &&
    a.focusDistance === b.focusDistance &&
    a.focusScale === b.focusScale &&
    a.focalLengthMm === b.focalLengthMm
  );
}
