import { RenderClient, ServiceError } from "./api.js";
import { rowCount } from "./band.js";
import { DefocusExplorer } from "./explorer.js";
import { APERTURE_STOPS, type RenderView, type SessionMeta } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const client = new RenderClient("");
const explorer = new DefocusExplorer(client);

const imageInput = $<HTMLInputElement>("image-file");
const depthInput = $<HTMLInputElement>("depth-file");
const saliencyInput = $<HTMLInputElement>("saliency-file");
const loadButton = $<HTMLButtonElement>("load-button");
const controlsBox = $<HTMLFieldSetElement>("controls");
const stopsBox = $<HTMLDivElement>("stops");
const fNumberEntry = $<HTMLInputElement>("fnumber-entry");
const focusSlider = $<HTMLInputElement>("focus-slider");
const focusReadout = $<HTMLSpanElement>("focus-readout");
const focusScaleInput = $<HTMLInputElement>("focus-scale");
const focalInput = $<HTMLInputElement>("focal-length");
const heatmapToggle = $<HTMLInputElement>("heatmap-toggle");
const renderImg = $<HTMLImageElement>("render");
const heatmapImg = $<HTMLImageElement>("heatmap");
const bandColumn = $<HTMLDivElement>("band");
const statusLine = $<HTMLDivElement>("status");
const errorLine = $<HTMLDivElement>("error");
const histCanvas = $<HTMLCanvasElement>("histogram");
const sweepButton = $<HTMLButtonElement>("sweep-button");
const sweepStatus = $<HTMLSpanElement>("sweep-status");

let displayUrl: string | null = null;
let heatmapUrl: string | null = null;
let heatmapBusy = false;

function setError(text: string): void {
  errorLine.textContent = text;
  errorLine.hidden = text === "";
}

function updateLoadEnabled(): void {
  // depth is mandatory: block the upload client-side when it is missing
  loadButton.disabled = !(imageInput.files?.length && depthInput.files?.length);
}

imageInput.addEventListener("change", updateLoadEnabled);
depthInput.addEventListener("change", updateLoadEnabled);
updateLoadEnabled();

function drawHistogram(meta: SessionMeta): void {
  const ctx = histCanvas.getContext("2d");
  if (!ctx) return;
  const { counts, edges } = meta.histogram;
  const w = histCanvas.width;
  const h = histCanvas.height;
  ctx.clearRect(0, 0, w, h);
  const peak = Math.max(...counts, 1);
  const barW = w / counts.length;
  ctx.fillStyle = "#4a7ba6";
  counts.forEach((count, i) => {
    const barH = (count / peak) * (h - 14);
    ctx.fillRect(i * barW, h - barH, Math.max(barW - 1, 1), barH);
  });
  // default focus distance marker
  const lo = edges[0] ?? meta.depthMin;
  const hi = edges[edges.length - 1] ?? meta.depthMax;
  const x = ((meta.defaultFocusDistance - lo) / (hi - lo || 1)) * w;
  ctx.strokeStyle = "#e08020";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(x, 0);
  ctx.lineTo(x, h);
  ctx.stroke();
  ctx.fillStyle = "#e08020";
  ctx.fillText("f_d", Math.min(x + 3, w - 18), 10);
}

function paintBand(view: RenderView, height: number): void {
  bandColumn.replaceChildren();
  for (const [a, b] of view.inFocusRows) {
    const seg = document.createElement("div");
    seg.className = "band-segment";
    seg.style.top = `${(a / height) * 100}%`;
    seg.style.height = `${((b - a + 1) / height) * 100}%`;
    bandColumn.appendChild(seg);
  }
}

function paintStatus(view: RenderView): void {
  const rows = rowCount(view.inFocusRows);
  statusLine.textContent =
    `f/${view.state.fNumber}  focus ${view.focusDistance.toFixed(3)} ` +
    `(${view.focusSource})  energy ${view.energy.toFixed(2)}  ` +
    `coc px min/mean/max ${view.cocMinPx.toFixed(2)}/${view.cocMeanPx.toFixed(2)}/` +
    `${view.cocMaxPx.toFixed(2)}  in-focus rows ${rows}`;
}

async function refreshHeatmap(): Promise<void> {
  if (!heatmapToggle.checked || !explorer.controls || heatmapBusy) {
    heatmapImg.hidden = !heatmapToggle.checked;
    return;
  }
  heatmapBusy = true;
  try {
    const view = await client.render(
      explorer.sessionId,
      explorer.controls,
      "coc_heatmap",
    );
    if (heatmapUrl) URL.revokeObjectURL(heatmapUrl);
    heatmapUrl = URL.createObjectURL(view.blob);
    heatmapImg.src = heatmapUrl;
    heatmapImg.hidden = false;
  } catch (err) {
    setError(String(err));
  } finally {
    heatmapBusy = false;
  }
}

explorer.onDisplay = (view) => {
  const meta = explorer.meta;
  if (!meta) return;
  if (displayUrl) URL.revokeObjectURL(displayUrl);
  displayUrl = URL.createObjectURL(view.blob);
  renderImg.src = displayUrl;
  paintBand(view, meta.height);
  paintStatus(view);
  setError("");
  void refreshHeatmap();
};

explorer.onError = (err) => {
  if (err instanceof ServiceError) setError(`server: ${err.message}`);
  else setError(String(err));
};

loadButton.addEventListener("click", async () => {
  const image = imageInput.files?.[0];
  const depth = depthInput.files?.[0];
  if (!image || !depth) return;
  setError("");
  loadButton.disabled = true;
  try {
    const meta = await explorer.loadSession(
      image,
      depth,
      saliencyInput.files?.[0] ?? undefined,
    );
    controlsBox.disabled = false;
    sweepButton.disabled = false;
    drawHistogram(meta);
    focusSlider.min = String(meta.depthMin);
    focusSlider.max = String(meta.depthMax);
    focusSlider.step = String((meta.depthMax - meta.depthMin) / 500 || 0.001);
    focusSlider.value = String(meta.defaultFocusDistance);
    focusReadout.textContent = meta.defaultFocusDistance.toFixed(3);
    fNumberEntry.value = "1.8";
    explorer.setControls({}); // first render with the defaults
  } catch (err) {
    // e.g. mismatched dimensions -> inline error from the server's 400
    explorer.onError?.(err);
  } finally {
    loadButton.disabled = false;
  }
});

for (const stop of APERTURE_STOPS) {
  const button = document.createElement("button");
  button.type = "button";
  button.textContent = `f/${stop}`;
  button.addEventListener("click", () => {
    fNumberEntry.value = String(stop);
    explorer.setControls({ fNumber: stop });
  });
  stopsBox.appendChild(button);
}

fNumberEntry.addEventListener("change", () => {
  explorer.setControls({ fNumber: Number(fNumberEntry.value) });
});

focusSlider.addEventListener("input", () => {
  const value = Number(focusSlider.value);
  focusReadout.textContent = value.toFixed(3);
  explorer.setControls({ focusDistance: value });
});

focusScaleInput.addEventListener("change", () => {
  explorer.setControls({ focusScale: Number(focusScaleInput.value) });
});

focalInput.addEventListener("change", () => {
  explorer.setControls({ focalLengthMm: Number(focalInput.value) });
});

heatmapToggle.addEventListener("change", () => void refreshHeatmap());

sweepButton.addEventListener("click", async () => {
  sweepButton.disabled = true;
  sweepStatus.textContent = "sweeping...";
  try {
    const sweep = await explorer.runSweep();
    sweepStatus.textContent = `blur monotonicity ${sweep.blurMonotonicity.toFixed(1)}%`;
    // play the aperture stack as a frame sequence, ascending f-number
    for (let i = 0; i < sweep.frames.length; i++) {
      const frame = sweep.frames[i];
      if (!frame) continue;
      const url = URL.createObjectURL(frame);
      renderImg.src = url;
      statusLine.textContent =
        `sweep f/${sweep.fNumbers[i]}  energy ${sweep.energies[i]?.toFixed(2)}`;
      await new Promise((resolve) => setTimeout(resolve, 400));
      URL.revokeObjectURL(url);
    }
    explorer.setControls({}); // restore the interactive view
  } catch (err) {
    explorer.onError?.(err);
    sweepStatus.textContent = "";
  } finally {
    sweepButton.disabled = false;
  }
});
