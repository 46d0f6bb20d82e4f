import { parseInFocusRows } from "./band.js";
import type {
  ControlState,
  RenderView,
  RowRange,
  SessionMeta,
  SweepResult,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

async function raiseServiceError(resp: Response): Promise<never> {
  let code = "http_error";
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.code === "string") code = body.code;
    if (body && body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, code, detail);
}

function controlBody(sessionId: string, state: ControlState) {
  return {
    session_id: sessionId,
    f_number: state.fNumber,
    focus_distance: state.focusDistance,
    focus_scale: state.focusScale,
    focal_length_mm: state.focalLengthMm,
  };
}

function base64ToBlob(data: string, type: string): Blob {
  const binary = atob(data);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return new Blob([bytes], { type });
}

/** Thin client for the render service. The UI never computes lens math
 * locally: every displayed pixel and statistic comes from these calls. */
export class RenderClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchImpl: FetchLike = fetch,
    /** Extra lens overrides sent with every render (e.g. pixels_per_unit). */
    public lensExtras: Record<string, number> = {},
  ) {}

  private get f(): FetchLike {
    return this.fetchImpl;
  }

  async createSession(
    image: Blob,
    depth: Blob,
    saliency?: Blob,
  ): Promise<SessionMeta> {
    const form = new FormData();
    form.append("image", image, "image.png");
    form.append("depth", depth, "depth.pfm");
    if (saliency) form.append("saliency", saliency, "saliency.pfm");
    const resp = await this.f(`${this.baseUrl}/session`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) await raiseServiceError(resp);
    const body = await resp.json();
    return {
      sessionId: body.session_id,
      width: body.width,
      height: body.height,
      channels: body.channels,
      depthMin: body.depth_min,
      depthMax: body.depth_max,
      defaultFocusDistance: body.default_focus_distance,
      focusSource: body.focus_source,
      histogram: body.histogram,
    };
  }

  async render(
    sessionId: string,
    state: ControlState,
    output: "image" | "coc_heatmap" | "in_focus_mask" = "image",
  ): Promise<Omit<RenderView, "seq">> {
    const resp = await this.f(`${this.baseUrl}/render`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        ...controlBody(sessionId, state),
        ...this.lensExtras,
        output,
      }),
    });
    if (!resp.ok) await raiseServiceError(resp);
    const blob = await resp.blob();
    const num = (name: string) => Number(resp.headers.get(name) ?? "NaN");
    return {
      blob,
      state,
      energy: num("X-Signal-Energy"),
      focusDistance: num("X-Focus-Distance"),
      focusSource: resp.headers.get("X-Focus-Source") ?? "",
      cocMinPx: num("X-Coc-Min-Px"),
      cocMeanPx: num("X-Coc-Mean-Px"),
      cocMaxPx: num("X-Coc-Max-Px"),
      inFocusRows: parseInFocusRows(resp.headers.get("X-In-Focus-Rows")),
    };
  }

  async sweep(sessionId: string, state: ControlState): Promise<SweepResult> {
    const { f_number: _drop, ...body } = controlBody(sessionId, state);
    const resp = await this.f(`${this.baseUrl}/sweep`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ...body, ...this.lensExtras }),
    });
    if (!resp.ok) await raiseServiceError(resp);
    const payload = await resp.json();
    return {
      fNumbers: payload.f_numbers,
      energies: payload.energies,
      blurMonotonicity: payload.blur_monotonicity,
      inFocusRows: (payload.in_focus_rows as string[]).map(
        (h): RowRange[] => parseInFocusRows(h),
      ),
      frames: (payload.frames as string[]).map((f) =>
        base64ToBlob(f, "image/png"),
      ),
    };
  }

  async sessionMeta(sessionId: string): Promise<unknown> {
    const resp = await this.f(`${this.baseUrl}/session/${sessionId}/meta`);
    if (!resp.ok) await raiseServiceError(resp);
    return resp.json();
  }

  async deleteSession(sessionId: string): Promise<void> {
    const resp = await this.f(`${this.baseUrl}/session/${sessionId}`, {
      method: "DELETE",
    });
    if (!resp.ok && resp.status !== 404) await raiseServiceError(resp);
  }
}
