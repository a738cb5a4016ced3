/** Browser entry point: wires the session state machine, the electrode map
 * with click/lasso selection, the sweep form, the live curve, the confusion
 * heatmap, the result history, and the stencil download form to the service
 * endpoints. All logic lives in the sibling modules; this file is DOM glue. */

import { SweepClient } from "./client.js";
import { confusionHeatmap } from "./heatmap.js";
import type { DatasetSummary, SweepRequest } from "./protocol.js";
import {
  lassoSelect,
  parseElectrodeMap,
  toggleSelection,
} from "./selection.js";
import type { ElectrodePosition, Point } from "./selection.js";
import { DesignerSession } from "./session.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const session = new DesignerSession();
let client: SweepClient | null = null;
let datasets: DatasetSummary[] = [];
let electrodes: ElectrodePosition[] = [];
let selection = new Set<number>();
let selectedGestures = new Set<number>();

function currentDataset(): DatasetSummary | undefined {
  const name = ($("dataset") as HTMLSelectElement).value;
  return datasets.find((d) => d.name === name);
}

function render(): void {
  $("state").textContent = session.state;
  ($("run") as HTMLButtonElement).disabled = !session.canRun;
  ($("cancel") as HTMLButtonElement).disabled = session.canRun;
  $("error").textContent = session.lastError
    ? `${session.lastError.field}: ${session.lastError.message}`
    : "";
  renderCurve();
  renderResult();
  renderMapHighlights();
}

function renderCurve(): void {
  const points = session.curve();
  const svg = $("curve");
  if (points.length === 0) {
    svg.innerHTML = "";
    return;
  }
  const w = 400;
  const h = 160;
  const maxE = Math.max(...points.map((p) => p.electrodeCount));
  const minE = Math.min(...points.map((p) => p.electrodeCount));
  const span = Math.max(1, maxE - minE);
  const coords = points
    .map((p) => {
      const x = ((p.electrodeCount - minE) / span) * (w - 20) + 10;
      const y = h - 10 - (p.accuracy / 100) * (h - 20);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  svg.innerHTML =
    `<polyline points="${coords}" fill="none" stroke="#0a6" stroke-width="2"/>` +
    points
      .map((p) => {
        const x = ((p.electrodeCount - minE) / span) * (w - 20) + 10;
        const y = h - 10 - (p.accuracy / 100) * (h - 20);
        return `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="3" fill="#0a6">` +
          `<title>E=${p.electrodeCount}: ${p.accuracy.toFixed(2)}%</title></circle>`;
      })
      .join("");
}

function renderResult(): void {
  const panel = $("result");
  const entry = session.lastResult;
  if (!entry) {
    panel.innerHTML = "<em>no result yet</em>";
    return;
  }
  const chosen = entry.result.chosen;
  const dataset = datasets.find((d) => d.name === entry.request.dataset);
  const names = new Map((dataset?.gestures ?? []).map((g) => [g.id, g.name]));
  let heatmapHtml = "";
  if (chosen.confusion_matrix) {
    const model = confusionHeatmap(
      chosen.confusion_matrix,
      entry.request.gestures,
      names,
    );
    const header = model.labels.map((l) => `<th>${l}</th>`).join("");
    const rows = model.counts
      .map((row, i) => {
        const cells = row
          .map((count) => {
            const intensity = model.maxCount ? count / model.maxCount : 0;
            const bg = `rgba(10, 102, 170, ${(0.15 + 0.85 * intensity).toFixed(2)})`;
            return `<td style="background:${bg}">${count}</td>`;
          })
          .join("");
        return `<tr><th>${model.labels[i]}</th>${cells}</tr>`;
      })
      .join("");
    heatmapHtml = `<table class="heatmap"><tr><th></th>${header}</tr>${rows}</table>`;
  }
  panel.innerHTML = `
    <p>chosen layout: E=${chosen.E} (${chosen.electrodes.join(", ")})
       &mdash; accuracy ${chosen.accuracy.toFixed(2)}%,
       score ${chosen.sparsity_score.toFixed(2)}</p>
    ${heatmapHtml}
    <p><a href="/models/${entry.modelId}" download>download model</a></p>`;
  $("history").innerHTML = session.history
    .map(
      (h, i) =>
        `<li>#${i + 1}: E=${h.result.chosen.E}, ` +
        `${h.result.chosen.accuracy.toFixed(2)}% ` +
        `(gestures ${h.request.gestures.join(",")})</li>`,
    )
    .join("");
}

function renderMapHighlights(): void {
  const chosen = new Set(session.chosenLayout());
  for (const e of electrodes) {
    const el = document.getElementById(`electrode-${e.id}`);
    if (!el) {
      console.warn(`unknown electrode element electrode-${e.id}`);
      continue;
    }
    el.setAttribute(
      "fill",
      chosen.has(e.id) ? "#0a6" : selection.has(e.id) ? "#fa3" : "#dddddd",
    );
  }
}

async function loadDatasets(): Promise<void> {
  const resp = await fetch("/datasets");
  datasets = ((await resp.json()) as { datasets: DatasetSummary[] }).datasets;
  const select = $("dataset") as HTMLSelectElement;
  select.innerHTML = datasets
    .map((d) => `<option value="${d.name}">${d.name}</option>`)
    .join("");
  await loadMap();
}

async function loadMap(): Promise<void> {
  const dataset = currentDataset();
  if (!dataset) return;
  const resp = await fetch(`/datasets/${dataset.name}/map.svg`);
  const svg = await resp.text();
  $("map").innerHTML = svg;
  electrodes = parseElectrodeMap(svg);
  selection = new Set(electrodes.map((e) => e.id));
  const users = $("user") as HTMLSelectElement;
  users.innerHTML = dataset.users
    .map((u) => `<option value="${u}">${u}</option>`)
    .join("");
  $("gestures").innerHTML = dataset.gestures
    .map(
      (g) =>
        `<label><input type="checkbox" data-gesture="${g.id}" checked> ${g.name}</label>`,
    )
    .join("");
  selectedGestures = new Set(dataset.gestures.map((g) => g.id));
  $("gestures").addEventListener("change", (ev) => {
    const box = ev.target as HTMLInputElement;
    const id = Number(box.dataset.gesture);
    if (box.checked) selectedGestures.add(id);
    else selectedGestures.delete(id);
  });
  wireMapInteractions();
  render();
}

function svgPoint(svg: SVGSVGElement, ev: MouseEvent): Point {
  const rect = svg.getBoundingClientRect();
  const vb = svg.viewBox.baseVal;
  return {
    x: vb.x + ((ev.clientX - rect.left) / rect.width) * vb.width,
    y: vb.y + ((ev.clientY - rect.top) / rect.height) * vb.height,
  };
}

function wireMapInteractions(): void {
  const svg = $("map").querySelector("svg") as SVGSVGElement | null;
  if (!svg) return;
  let lasso: Point[] = [];
  let sketching = false;

  svg.addEventListener("click", (ev) => {
    const target = ev.target as Element;
    const raw = target.getAttribute("data-electrode-id");
    if (raw === null) return;
    selection = toggleSelection(selection, Number(raw));
    render();
  });
  svg.addEventListener("mousedown", (ev) => {
    if (!ev.shiftKey) return; // shift-drag sketches a lasso region
    sketching = true;
    lasso = [svgPoint(svg, ev)];
  });
  svg.addEventListener("mousemove", (ev) => {
    if (sketching) lasso.push(svgPoint(svg, ev));
  });
  svg.addEventListener("mouseup", () => {
    if (!sketching) return;
    sketching = false;
    const inside = lassoSelect(electrodes, lasso);
    if (inside.length > 0) selection = new Set(inside);
    lasso = [];
    render();
  });
}

function buildRequest(): SweepRequest {
  const dataset = currentDataset();
  if (!dataset) throw new Error("no dataset selected");
  return {
    dataset: dataset.name,
    user: ($("user") as HTMLSelectElement).value,
    gestures: dataset.gestures
      .map((g) => g.id)
      .filter((id) => selectedGestures.has(id)),
    candidate_electrodes: [...selection].sort((a, b) => a - b),
    max_electrodes: Number(($("max") as HTMLInputElement).value),
    scheme: ($("scheme") as HTMLSelectElement).value as SweepRequest["scheme"],
    classifier: ($("classifier") as HTMLSelectElement)
      .value as SweepRequest["classifier"],
    seed: Number(($("seed") as HTMLInputElement).value),
    sparsity: {
      w1: Number(($("w1") as HTMLInputElement).value),
      w2: Number(($("w2") as HTMLInputElement).value),
    },
  };
}

function connect(): SweepClient {
  const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  const socket = new WebSocket(url);
  const wrapped = new SweepClient(
    {
      send: (data) => socket.send(data),
      close: () => socket.close(),
      onmessage: null,
    },
    session,
  );
  socket.onmessage = (ev) => {
    session.onEvent(JSON.parse(ev.data as string));
    render();
  };
  return wrapped;
}

async function downloadStencil(): Promise<void> {
  const dataset = currentDataset();
  if (!dataset || !session.lastResult) return;
  const pairs = ($("circumference") as HTMLInputElement).value
    .split(",")
    .map((pair) => pair.split(":").map(Number));
  const resp = await fetch("/stencil", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      dataset: dataset.name,
      layout: session.chosenLayout(),
      measurements: {
        forearm_length_mm: Number(($("length") as HTMLInputElement).value),
        circumference_samples: pairs,
      },
    }),
  });
  if (!resp.ok) {
    const body = (await resp.json()) as { error: { field: string; message: string } };
    $("error").textContent = `${body.error.field}: ${body.error.message}`;
    return;
  }
  const blob = await resp.blob();
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "stencil.svg";
  link.click();
}

export function init(): void {
  client = connect();
  void loadDatasets();
  ($("dataset") as HTMLSelectElement).addEventListener("change", () => void loadMap());
  $("run").addEventListener("click", () => {
    try {
      client?.runSweep(buildRequest());
    } catch (err) {
      $("error").textContent = String(err);
    }
    render();
  });
  $("cancel").addEventListener("click", () => client?.cancel());
  $("stencil").addEventListener("click", () => void downloadStencil());
  render();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  init();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
