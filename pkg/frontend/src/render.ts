/** DOM rendering: step-layer selector, heatmap canvas, ranked areas. */

import { colorize } from "./heatmap";
import { SessionStore, Snapshot } from "./state";

export interface ConsoleElements {
  form: HTMLFormElement;
  input: HTMLInputElement;
  layerBar: HTMLElement;
  canvas: HTMLCanvasElement;
  rankedList: HTMLElement;
  status: HTMLElement;
  robotLabel: HTMLElement;
}

export function wire(store: SessionStore, el: ConsoleElements): void {
  el.form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void store.submitCommand(el.input.value);
  });
  store.subscribe((s) => render(store, el, s));
  render(store, el, store.state());
}

export function render(store: SessionStore, el: ConsoleElements, s: Snapshot): void {
  renderLayers(store, el.layerBar, s);
  renderHeatmap(el.canvas, s);
  renderRanked(store, el.rankedList, s);
  el.robotLabel.textContent = s.robot ? `robot: area ${s.robot}` : "robot: –";
  el.status.textContent = s.error ?? (s.busy ? "working…" : "");
  el.status.classList.toggle("error", s.error !== null);
}

function renderLayers(store: SessionStore, bar: HTMLElement, s: Snapshot): void {
  bar.textContent = "";
  for (const layer of s.layers) {
    const btn = bar.ownerDocument.createElement("button");
    btn.className = "layer" + (layer.index === s.selectedStep ? " selected" : "");
    btn.textContent = `${layer.index + 1}: [${layer.type}] ${layer.modifier}`;
    btn.addEventListener("click", () => store.selectStep(layer.index));
    bar.appendChild(btn);
  }
}

function renderHeatmap(canvas: HTMLCanvasElement, s: Snapshot): void {
  const layer = s.layers[s.selectedStep];
  if (!layer || !layer.grid) return;
  canvas.width = layer.grid.width;
  canvas.height = layer.grid.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return; // non-rendering test environment
  const image = ctx.createImageData(layer.grid.width, layer.grid.height);
  image.data.set(colorize(layer.grid));
  ctx.putImageData(image, 0, 0);
}

function renderRanked(store: SessionStore, list: HTMLElement, s: Snapshot): void {
  list.textContent = "";
  for (const area of s.rankedAreas.slice(0, 10)) {
    const item = list.ownerDocument.createElement("li");
    item.className = "ranked" + (s.topFive.includes(area.id) ? " top-five" : "");
    item.dataset.areaId = area.id;
    item.textContent = `${area.id}  ${area.weight.toFixed(4)}`;
    const go = list.ownerDocument.createElement("button");
    go.textContent = "go";
    go.addEventListener("click", () => void store.confirmAndGo(area.id));
    item.appendChild(go);
    list.appendChild(item);
  }
}
