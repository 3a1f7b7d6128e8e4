// Drives the demo page. Build the wasm bundle first:
//   wasm-pack build --target web --out-dir www/pkg crates/wasm-demo
// then serve crates/wasm-demo/www with any static file server.

import init, { objective_field, run_strategy, decode_keys } from "./pkg/hbrkga_wasm.js";

const BOUNDS = { rastrigin: 5.12, sphere: 5.12, rosenbrock: 2.048 };

const $ = (id) => document.getElementById(id);
const errorBox = $("error");

function showError(e) {
  errorBox.textContent = e instanceof Error ? e.message : String(e);
}

function clearError() {
  errorBox.textContent = "";
}

// --- surface heatmap -------------------------------------------------------

function drawField(canvas, name, bound) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const field = objective_field(name, -bound, bound, -bound, bound, w, h);
  let lo = Infinity, hi = -Infinity;
  for (const v of field) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const img = ctx.createImageData(w, h);
  for (let i = 0; i < field.length; i++) {
    // sqrt flattens the huge peaks so valleys stay visible
    const t = Math.sqrt((field[i] - lo) / (hi - lo + 1e-12));
    img.data[4 * i] = 12 + 225 * t;       // R
    img.data[4 * i + 1] = 28 + 120 * t;   // G
    img.data[4 * i + 2] = 90 - 60 * t + 120 * (1 - t); // B
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function toCanvas(canvas, bound, x, y) {
  const cx = ((x + bound) / (2 * bound)) * canvas.width;
  const cy = ((y + bound) / (2 * bound)) * canvas.height;
  return [cx, cy];
}

function drawTrials(canvas, bound, trials, best) {
  const ctx = canvas.getContext("2d");
  trials.forEach((t, i) => {
    const frac = i / Math.max(1, trials.length - 1);
    const [cx, cy] = toCanvas(canvas, bound, t.x, t.y);
    ctx.beginPath();
    ctx.arc(cx, cy, 3, 0, 2 * Math.PI);
    ctx.fillStyle = `hsl(${120 - 120 * frac} 90% 60%)`; // early green, late red
    ctx.strokeStyle = "#0008";
    ctx.fill();
    ctx.stroke();
  });
  const [bx, by] = toCanvas(canvas, bound, best.x, best.y);
  ctx.strokeStyle = "#fff";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(bx - 8, by); ctx.lineTo(bx + 8, by);
  ctx.moveTo(bx, by - 8); ctx.lineTo(bx, by + 8);
  ctx.stroke();
  ctx.lineWidth = 1;
}

function drawCurve(canvas, curve) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#8882";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const pad = 42;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  const lo = Math.min(...curve);
  const hi = Math.max(...curve);
  const span = hi - lo || 1;
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w, h);
  ctx.beginPath();
  curve.forEach((v, i) => {
    const x = pad + (w * i) / Math.max(1, curve.length - 1);
    const y = pad + h * (1 - (v - lo) / span);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.strokeStyle = "#e67e22";
  ctx.lineWidth = 2.5;
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "currentColor";
  ctx.font = "12px ui-monospace, monospace";
  ctx.fillText("best score so far per evaluation", pad, pad - 10);
  ctx.fillText(hi.toPrecision(4), 4, pad + 10);
  ctx.fillText(lo.toPrecision(4), 4, pad + h);
}

function runSearch() {
  clearError();
  try {
    const objective = $("objective").value;
    const bound = BOUNDS[objective];
    const params = {
      objective,
      strategy: $("strategy").value,
      seed: Number($("seed").value),
      bounds: [-bound, bound],
      population_size: Number($("population").value),
      elite_size: Number($("elite").value),
      mutant_size: Number($("mutants").value),
      elite_bias: Number($("bias").value),
      walk_steps: Number($("walk").value),
      perturbation_ratio: Number($("ratio").value),
      generations: Number($("generations").value),
    };
    const surface = $("surface");
    drawField(surface, objective, bound);
    const outcome = JSON.parse(run_strategy(JSON.stringify(params)));
    drawTrials(surface, bound, outcome.trials, outcome.best);
    drawCurve($("curve"), outcome.trials.map((t) => t.best));
    $("readout").textContent =
      `${outcome.evaluations} evaluations | best f(${outcome.best.x.toFixed(3)}, ` +
      `${outcome.best.y.toFixed(3)}) = ${outcome.best.score.toPrecision(6)}`;
  } catch (e) {
    showError(e);
  }
}

// --- key decoding explorer --------------------------------------------------

const DEMO_SPACE = [
  { name: "layer units", kind: "int", min: 0, max: 100 },
  { name: "dropout-ish rate", kind: "float", min: 0, max: 3 },
  { name: "window", kind: "int", min: 0, max: 50 },
  { name: "momentum-ish", kind: "float", min: -1, max: 1 },
];
const KEY_DEFAULTS = [0.7, 0.5, 0.6, 0.5];

function buildDecodeTable() {
  const tbody = $("decode-table").querySelector("tbody");
  DEMO_SPACE.forEach((dim, i) => {
    const row = document.createElement("tr");
    row.innerHTML =
      `<td>${dim.name} <small>(${dim.kind} [${dim.min}, ${dim.max}])</small></td>` +
      `<td class="mono" id="key-${i}"></td>` +
      `<td><input type="range" id="slider-${i}" min="0" max="1" step="0.001" value="${KEY_DEFAULTS[i]}"></td>` +
      `<td class="mono" id="value-${i}"></td>`;
    tbody.appendChild(row);
    row.querySelector("input").addEventListener("input", refreshDecode);
  });
}

function refreshDecode() {
  clearError();
  try {
    const keys = DEMO_SPACE.map((_, i) => Number($(`slider-${i}`).value));
    const request = { space: DEMO_SPACE.map(({ name, kind, min, max }) => ({ name, kind, min, max })), keys };
    const response = JSON.parse(decode_keys(JSON.stringify(request)));
    DEMO_SPACE.forEach((dim, i) => {
      $(`key-${i}`).textContent = keys[i].toFixed(3);
      const value = response.values[i];
      $(`value-${i}`).textContent = dim.kind === "int" ? String(value) : value.toFixed(4);
    });
  } catch (e) {
    showError(e);
  }
}

// --- boot -------------------------------------------------------------------

init()
  .then(() => {
    buildDecodeTable();
    refreshDecode();
    $("run").addEventListener("click", runSearch);
    runSearch();
  })
  .catch(showError);
