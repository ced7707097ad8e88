import init, { ringLayout, simulateTrial, sweepFit } from "./pkg/fittsbench_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = { u: "#1f77b4", u_h: "#2ca02c", u_r: "#d62728" };
const RING_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

let animation = null;

function fail(el, e) {
  el.className = "err";
  el.textContent = String(e.message ?? e);
}

function drawTask(ctx, layout, frame, trail) {
  const { width, height } = ctx.canvas;
  const scale = (Math.min(width, height) / 2 - 20) / 0.14;
  const px = ([x, y]) => [width / 2 + x * scale, height / 2 - y * scale];
  ctx.clearRect(0, 0, width, height);

  const r = (layout.target_diameter_m / 2) * scale;
  layout.targets.forEach((t, i) => {
    const [cx, cy] = px(t);
    ctx.beginPath();
    ctx.arc(cx, cy, r, 0, 2 * Math.PI);
    ctx.fillStyle = frame && frame.active_target === i ? "#ffd54f" : "#eee";
    ctx.fill();
    ctx.strokeStyle = "#999";
    ctx.stroke();
    ctx.fillStyle = "#666";
    ctx.fillText(String(i), cx - 3, cy + 4);
  });

  for (const key of ["u_h", "u_r", "u"]) {
    ctx.beginPath();
    trail.forEach((f, i) => {
      const [x, y] = px(f[key]);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.strokeStyle = COLORS[key];
    ctx.globalAlpha = key === "u" ? 0.9 : 0.35;
    ctx.stroke();
    ctx.globalAlpha = 1;
    if (frame) {
      const [x, y] = px(frame[key]);
      ctx.beginPath();
      ctx.arc(x, y, key === "u" ? 5 : 3, 0, 2 * Math.PI);
      ctx.fillStyle = COLORS[key];
      ctx.fill();
    }
  }
}

function runTrial() {
  const out = $("trial-out");
  out.className = "";
  if (animation) cancelAnimationFrame(animation);
  let trace;
  try {
    trace = JSON.parse(simulateTrial(+$("ring").value, +$("gamma").value, $("operator").value, +$("seed").value >>> 0));
  } catch (e) {
    return fail(out, e);
  }
  const ctx = $("task").getContext("2d");
  const frames = trace.frames.filter((f) => f.running);
  const mts = trace.movement_times_s.map((m) => m.toFixed(3)).join(", ");
  out.textContent =
    `ring ${trace.layout.ring_id}  ID ${trace.layout.id_bits.toFixed(3)} bits  robot reach ${trace.layout.robot_reach_time_s} s\n` +
    (trace.aborted ? `aborted: ${trace.aborted}\n` : "") +
    `movement times (s): ${mts}\n` +
    (trace.mean_mt_s == null ? "" : `mean MT ${trace.mean_mt_s.toFixed(3)} s`);

  const start = performance.now();
  const t0 = frames.length ? frames[0].t : 0;
  const step = () => {
    const elapsed = (performance.now() - start) / 1000;
    let n = frames.findIndex((f) => f.t - t0 > elapsed);
    if (n < 0) n = frames.length;
    drawTask(ctx, trace.layout, frames[n - 1], frames.slice(Math.max(0, n - 60), n));
    if (n < frames.length) animation = requestAnimationFrame(step);
  };
  step();
}

function drawCurves(ctx, result) {
  const { width, height } = ctx.canvas;
  const pad = 40;
  ctx.clearRect(0, 0, width, height);
  const mts = result.curves.flatMap((c) => c.points.map((p) => p.mt_s)).concat(result.cells.map((c) => c.mt_mean_s));
  const lo = Math.min(0, ...mts);
  const hi = Math.max(...mts) * 1.1;
  const x = (g) => pad + g * (width - 2 * pad);
  const y = (mt) => height - pad - ((mt - lo) / (hi - lo)) * (height - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, height - pad);
  ctx.lineTo(width - pad, height - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.fillText("gamma", width / 2, height - 8);
  ctx.fillText("MT (s)", 4, pad - 10);
  for (const g of [0, 0.5, 1]) ctx.fillText(String(g), x(g) - 6, height - pad + 14);
  ctx.fillText(hi.toFixed(2), 4, y(hi) + 4);

  result.curves.forEach((c, i) => {
    ctx.strokeStyle = RING_COLORS[i % RING_COLORS.length];
    ctx.beginPath();
    c.points.forEach((p, j) => (j === 0 ? ctx.moveTo(x(p.gamma), y(p.mt_s)) : ctx.lineTo(x(p.gamma), y(p.mt_s))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(`ring ${c.ring_id}`, width - pad + 2, y(c.points[c.points.length - 1].mt_s) + 4);
  });
  result.cells.forEach((c) => {
    ctx.fillStyle = RING_COLORS[(c.ring_id - 1) % RING_COLORS.length];
    ctx.beginPath();
    ctx.arc(x(c.gamma), y(c.mt_mean_s), 3.5, 0, 2 * Math.PI);
    ctx.fill();
  });
}

function runSweep() {
  const out = $("sweep-out");
  out.className = "";
  out.textContent = "running...";
  setTimeout(() => {
    let result;
    try {
      result = JSON.parse(sweepFit($("sweep-operator").value, $("sweep-gammas").value, +$("sweep-repeats").value, 1));
    } catch (e) {
      return fail(out, e);
    }
    drawCurves($("curves").getContext("2d"), result);
    const r = result.report;
    const f = r.adapted;
    out.textContent = f
      ? `MT = ${f.a.toFixed(4)} + ${f.b1.toFixed(4)} ID + ${f.b2.toFixed(4)} gamma + ${f.b3.toFixed(4)} gamma*ID\nr2 = ${f.r2.toFixed(4)}, n = ${f.n}`
      : `adapted fit unavailable: ${r.adapted_error}`;
    if (r.fitts_pooled) {
      out.textContent += `\npooled Fitts: MT = ${r.fitts_pooled.a.toFixed(4)} + ${r.fitts_pooled.b.toFixed(4)} ID, r2 = ${r.fitts_pooled.r2.toFixed(4)}`;
    }
  }, 0);
}

await init();
$("gamma").addEventListener("input", () => ($("gamma-out").value = (+$("gamma").value).toFixed(2)));
$("ring").addEventListener("change", () => drawTask($("task").getContext("2d"), JSON.parse(ringLayout(+$("ring").value)), null, []));
$("run").addEventListener("click", runTrial);
$("sweep").addEventListener("click", runSweep);
drawTask($("task").getContext("2d"), JSON.parse(ringLayout(1)), null, []);
