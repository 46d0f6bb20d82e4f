import { describe, expect, it } from "vitest";

import { RenderClient, ServiceError } from "../src/api.js";
import type { ControlState } from "../src/types.js";

const state: ControlState = {
  fNumber: 5.6,
  focusDistance: 2.0,
  focusScale: 1.0,
  focalLengthMm: 50,
};

function fetchStub(handler: (url: string, init?: RequestInit) => Response) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const impl = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({ url, init });
    return handler(url, init);
  }) as typeof fetch;
  return { impl, calls };
}

describe("RenderClient.render", () => {
  it("posts the control state and parses the response headers", async () => {
    const png = new Uint8Array([137, 80, 78, 71]);
    const { impl, calls } = fetchStub(
      () =>
        new Response(png, {
          status: 200,
          headers: {
            "X-Signal-Energy": "123.5",
            "X-Focus-Distance": "2.0",
            "X-Focus-Source": "user_override",
            "X-Coc-Min-Px": "0.0",
            "X-Coc-Mean-Px": "1.5",
            "X-Coc-Max-Px": "8.0",
            "X-In-Focus-Rows": "10-20",
          },
        }),
    );
    const client = new RenderClient("http://svc", impl, { coc_max_px: 32 });
    const view = await client.render("sess", state);
    expect(calls[0]!.url).toBe("http://svc/render");
    const body = JSON.parse(String(calls[0]!.init?.body));
    expect(body).toEqual({
      session_id: "sess",
      f_number: 5.6,
      focus_distance: 2.0,
      focus_scale: 1.0,
      focal_length_mm: 50,
      coc_max_px: 32,
      output: "image",
    });
    expect(view.energy).toBe(123.5);
    expect(view.inFocusRows).toEqual([[10, 20]]);
    expect(view.focusSource).toBe("user_override");
    expect(await view.blob.arrayBuffer()).toEqual(png.buffer);
  });

  it("surfaces service error codes", async () => {
    const { impl } = fetchStub(
      () =>
        new Response(JSON.stringify({ code: "singular_lens", detail: "pole" }), {
          status: 422,
        }),
    );
    const client = new RenderClient("", impl);
    await expect(client.render("sess", state)).rejects.toThrowError(ServiceError);
    try {
      await client.render("sess", state);
    } catch (err) {
      expect((err as ServiceError).status).toBe(422);
      expect((err as ServiceError).code).toBe("singular_lens");
    }
  });
});

describe("RenderClient.sweep", () => {
  it("decodes frames and per-frame band headers", async () => {
    const payload = {
      f_numbers: [1.8, 22],
      energies: [10, 20],
      blur_monotonicity: 100.0,
      in_focus_rows: ["1-2", "0-9"],
      frames: [btoa("frame0"), btoa("frame1")],
    };
    const { impl } = fetchStub(
      () => new Response(JSON.stringify(payload), { status: 200 }),
    );
    const client = new RenderClient("", impl);
    const sweep = await client.sweep("sess", state);
    expect(sweep.blurMonotonicity).toBe(100.0);
    expect(sweep.inFocusRows).toEqual([[[1, 2]], [[0, 9]]]);
    expect(await sweep.frames[0]!.text()).toBe("frame0");
  });
});
