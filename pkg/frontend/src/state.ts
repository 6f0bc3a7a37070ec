export interface RenderSettings {
  showBoxes: boolean;
}

export interface EditorState {
  shapeId: string | null;
  /** absolute handle values, one per handle of the selected shape */
  sliders: number[];
  transferTargets: string[];
  settings: RenderSettings;
}

export function initialState(): EditorState {
  return { shapeId: null, sliders: [], transferTargets: [], settings: { showBoxes: true } };
}

/** Clamp a slider value against the handle's lower bound (scales stay >= 0). */
export function clampValue(value: number, lower: number | null): number {
  if (lower !== null && value < lower) return lower;
  return value;
}

export function serializeState(state: EditorState): string {
  return encodeURIComponent(
    JSON.stringify({
      s: state.shapeId,
      v: state.sliders,
      t: state.transferTargets,
      b: state.settings.showBoxes,
    }),
  );
}

export function restoreState(hash: string): EditorState | null {
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return null;
  try {
    const parsed = JSON.parse(decodeURIComponent(raw));
    if (typeof parsed !== "object" || parsed === null) return null;
    return {
      shapeId: typeof parsed.s === "string" ? parsed.s : null,
      sliders: Array.isArray(parsed.v) ? parsed.v.map(Number) : [],
      transferTargets: Array.isArray(parsed.t) ? parsed.t.map(String) : [],
      settings: { showBoxes: Boolean(parsed.b) },
    };
  } catch {
    return null;
  }
}
