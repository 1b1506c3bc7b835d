import init, { problems, solve_problem, evaluate_cone } from "./pkg/robustmo_wasm.js";

const $ = (id) => document.getElementById(id);
const numbers = (text) =>
  text.split(",").map((s) => s.trim()).filter((s) => s.length).map(Number);
const fmt = (v) => (v === null || v === undefined ? "" : Number(v).toPrecision(6));

function fillCatalog(list) {
  const rows = list.map((p) => {
    const box = p.bounds ? `[${p.bounds.lower.join(", ")}] to [${p.bounds.upper.join(", ")}]` : "";
    return `<tr><td>${p.name}</td><td>${p.n}</td><td>${p.m}</td><td>${p.scenarios}</td><td>${p.source}</td><td>${box}</td></tr>`;
  });
  $("catalog").innerHTML =
    "<tr><th>name</th><th>n</th><th>m</th><th>scenarios</th><th>source</th><th>box</th></tr>" + rows.join("");
  $("problem").innerHTML = list.map((p) => `<option>${p.name}</option>`).join("");
}

function plotImages(trace) {
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pts = [];
  const last = trace.records.length - 1;
  trace.records.forEach((r, pos) => {
    const colour = pos === last ? "#d11f1f" : pos === 0 ? "#000" : "#1f5fd1";
    r.image.forEach((f, i) => pts.push({ x: f[0], y: f[1] ?? 0, colour, maximal: r.maximal_ids.includes(i), last: pos === last }));
  });
  if (!pts.length) return;
  const pad = 40;
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const p of pts) {
    x0 = Math.min(x0, p.x); x1 = Math.max(x1, p.x);
    y0 = Math.min(y0, p.y); y1 = Math.max(y1, p.y);
  }
  const sx = (canvas.width - 2 * pad) / (x1 - x0 || 1);
  const sy = (canvas.height - 2 * pad) / (y1 - y0 || 1);
  const px = (v) => pad + (v - x0) * sx;
  const py = (v) => canvas.height - pad - (v - y0) * sy;

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(`f1: ${fmt(x0)} .. ${fmt(x1)}`, pad, canvas.height - 12);
  ctx.save();
  ctx.translate(12, canvas.height - pad);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(`f2: ${fmt(y0)} .. ${fmt(y1)}`, 0, 0);
  ctx.restore();

  // final points last so they stay visible
  pts.sort((a, b) => a.last - b.last);
  for (const p of pts) {
    ctx.fillStyle = p.colour;
    ctx.beginPath();
    ctx.arc(px(p.x), py(p.y), 3, 0, 2 * Math.PI);
    ctx.fill();
    if (p.maximal) {
      ctx.strokeStyle = p.colour;
      ctx.beginPath();
      ctx.arc(px(p.x), py(p.y), 6, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

function showIterates(trace) {
  const head = "<tr><th>k</th><th>x</th><th>merit</th><th>phi</th><th>|p|</th><th>tau</th><th>maximal</th></tr>";
  const body = trace.records.slice(0, 200).map((r) =>
    `<tr><td>${r.k}</td><td>${r.x.map(fmt).join(", ")}</td><td>${fmt(r.merit)}</td><td>${fmt(r.phi)}</td>` +
    `<td>${fmt(r.p_norm)}</td><td>${fmt(r.tau)}</td><td>${r.maximal_ids.join(" ")}</td></tr>`);
  $("iterates").innerHTML = head + body.join("");
}

function runSolve() {
  const summary = $("solve-summary");
  try {
    const started = performance.now();
    const trace = JSON.parse(solve_problem($("problem").value, new Float64Array(numbers($("x0").value)),
      BigInt($("seed").value || 0), Number($("iters").value || 0)));
    const ms = (performance.now() - started).toFixed(1);
    const x = trace.records.at(-1)?.x ?? trace.x0;
    summary.className = "";
    summary.textContent = `${trace.status} after ${trace.records.length - 1} iterations (${ms} ms); ` +
      `x0 = [${trace.x0.map(fmt).join(", ")}], final x = [${x.map(fmt).join(", ")}]` +
      (trace.error ? `; ${trace.error}` : "");
    plotImages(trace);
    showIterates(trace);
  } catch (err) {
    summary.className = "error";
    summary.textContent = String(err.message ?? err);
  }
}

function runCone() {
  const out = $("cone-out");
  try {
    const report = JSON.parse(evaluate_cone($("rows").value, new Float64Array(numbers($("e").value)),
      new Float64Array(numbers($("z").value))));
    out.className = "";
    out.textContent = JSON.stringify(report, null, 2);
  } catch (err) {
    out.className = "error";
    out.textContent = String(err.message ?? err);
  }
}

await init();
fillCatalog(JSON.parse(problems()));
$("status").textContent = "Ready. Leave the start empty to sample one from the problem's box.";
$("solve").addEventListener("click", runSolve);
$("cone").addEventListener("click", runCone);
runSolve();
