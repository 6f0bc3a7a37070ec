import { ApiClient } from "./api.js";
import { Editor, ViewModel } from "./editor.js";
import { CloudRenderer } from "./render.js";
import { restoreState, serializeState } from "./state.js";

const api = new ApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const rawCanvas = el<HTMLCanvasElement>("raw-view");
const projCanvas = el<HTMLCanvasElement>("projected-view");
const strip = el<HTMLDivElement>("transfer-strip");
const shapeList = el<HTMLSelectElement>("shape-list");
const sliderPanel = el<HTMLDivElement>("sliders");
const boxToggle = el<HTMLInputElement>("box-toggle");
const status = el<HTMLDivElement>("status");

const rawRenderer = new CloudRenderer(rawCanvas);
const projRenderer = new CloudRenderer(projCanvas);

function renderView(view: ViewModel): void {
  rawRenderer.clear();
  projRenderer.clear();
  if (view.raw) rawRenderer.drawPoints(view.raw, "#d9480f");
  if (view.projected) projRenderer.drawPoints(view.projected, "#1864ab");
  if (view.shape && view.showBoxes) {
    rawRenderer.drawBoxes(view.shape.parts);
    projRenderer.drawBoxes(view.shape.parts);
  }
  strip.textContent = "";
  for (const entry of view.transferred) {
    const cell = document.createElement("div");
    cell.className = "transfer-cell";
    const label = document.createElement("div");
    label.textContent = entry.id;
    const canvas = document.createElement("canvas");
    canvas.width = 200;
    canvas.height = 200;
    cell.append(label, canvas);
    strip.append(cell);
    new CloudRenderer(canvas).drawPoints(entry.points, "#2b8a3e");
  }
  window.location.hash = serializeState(editor.state);
}

const editor = new Editor(api, renderView);

function buildSliders(): void {
  sliderPanel.textContent = "";
  const shape = editor.shape;
  if (!shape) return;
  shape.handles.forEach((meta, i) => {
    const row = document.createElement("label");
    row.className = "slider-row";
    const name = `${meta.kind === "translation" ? "t" : "s"}${"xyz"[meta.axis]} p${meta.part}`;
    const caption = document.createElement("span");
    caption.textContent = name;
    const input = document.createElement("input");
    input.type = "range";
    input.step = "0.01";
    const base = shape.defaults[i];
    const lower = shape.lower_bounds[i];
    input.min = String(lower !== null ? Math.max(lower, base - 1) : base - 0.5);
    input.max = String(meta.kind === "scale" ? base + 1 : base + 0.5);
    input.value = String(editor.state.sliders[i] ?? base);
    input.addEventListener("input", () => {
      editor.onSliderChange(i, Number(input.value));
      input.value = String(editor.state.sliders[i]); // reflect clamping
    });
    row.append(caption, input);
    sliderPanel.append(row);
  });
}

async function boot(): Promise<void> {
  try {
    const shapes = await api.shapes();
    shapeList.textContent = "";
    for (const s of shapes) {
      const opt = document.createElement("option");
      opt.value = s.id;
      opt.textContent = `${s.id} (${s.handles} handles)`;
      shapeList.append(opt);
    }
    const saved = restoreState(window.location.hash);
    const first = saved?.shapeId ?? shapes[0]?.id;
    if (first) {
      shapeList.value = first;
      await editor.selectShape(first);
      if (saved) {
        editor.state.transferTargets = saved.transferTargets;
        editor.state.settings = saved.settings;
        if (saved.sliders.length === editor.state.sliders.length) {
          editor.state.sliders = saved.sliders;
        }
      } else {
        editor.setTransferTargets(shapes.slice(1, 4).map((s) => s.id));
      }
      buildSliders();
    }
    shapeList.addEventListener("change", async () => {
      await editor.selectShape(shapeList.value);
      buildSliders();
    });
    boxToggle.addEventListener("change", () => editor.toggleBoxes(boxToggle.checked));
    status.textContent = "ready";
  } catch (err) {
    status.textContent = `error: ${err}`;
  }
}

void boot();
