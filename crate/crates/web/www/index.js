import init, { forwardField, cgoConvergence, singularSweep } from "./pkg/nldtn_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function mulberry32(seed) {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function coefficients() {
  const rng = mulberry32(Number($("seed").value) || 0);
  const c = new Float64Array(18);
  for (let n = 0; n < 18; n++) c[n] = 2 * rng() - 1;
  $("coeffs").textContent = "c^1: " + Array.from(c.slice(0, 6), (v) => v.toFixed(2)).join(" ") + " ...";
  return c;
}

const numbers = (text) => text.split(",").map((s) => Number(s.trim())).filter((v) => Number.isFinite(v));

function heatmap(canvas, n, values) {
  const ctx = canvas.getContext("2d");
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const span = hi - lo || 1;
  const cell = canvas.width / n;
  for (let j = 0; j < n; j++) {
    for (let i = 0; i < n; i++) {
      const r = (values[j * n + i] - lo) / span;
      ctx.fillStyle = `rgb(${Math.round(255 * r)}, ${Math.round(80 + 100 * (1 - Math.abs(2 * r - 1)))}, ${Math.round(255 * (1 - r))})`;
      ctx.fillRect(i * cell, canvas.height - (j + 1) * cell, cell + 1, cell + 1);
    }
  }
}

// series: [{label, xs, ys}]
function plot(canvas, series, { logx = false, logy = false, xlabel = "", ylabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 60, R = 10, T = 10, B = 36;
  ctx.clearRect(0, 0, W, H);
  const fx = logx ? Math.log10 : (v) => v;
  const fy = logy ? Math.log10 : (v) => v;
  const ok = (x, y) => Number.isFinite(fx(x)) && Number.isFinite(fy(y));
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const s of series) s.xs.forEach((x, n) => {
    if (!ok(x, s.ys[n])) return;
    x0 = Math.min(x0, fx(x)); x1 = Math.max(x1, fx(x));
    y0 = Math.min(y0, fy(s.ys[n])); y1 = Math.max(y1, fy(s.ys[n]));
  });
  if (!(x1 >= x0)) return;
  if (x1 === x0) { x0 -= 1; x1 += 1; }
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const px = (x) => L + ((fx(x) - x0) / (x1 - x0)) * (W - L - R);
  const py = (y) => T + (1 - (fy(y) - y0) / (y1 - y0)) * (H - T - B);
  ctx.strokeStyle = "#000";
  ctx.strokeRect(L, T, W - L - R, H - T - B);
  ctx.fillStyle = "#000";
  ctx.font = "11px sans-serif";
  const tick = (v, log) => (log ? "1e" + v.toFixed(1) : v.toPrecision(3));
  ctx.fillText(tick(x0, logx), L, H - 20);
  ctx.fillText(tick(x1, logx), W - R - 40, H - 20);
  ctx.fillText(tick(y1, logy), 2, T + 10);
  ctx.fillText(tick(y0, logy), 2, H - B);
  ctx.fillText(xlabel, L + (W - L - R) / 2 - 20, H - 4);
  ctx.save(); ctx.translate(12, H / 2 + 20); ctx.rotate(-Math.PI / 2); ctx.fillText(ylabel, 0, 0); ctx.restore();
  series.forEach((s, k) => {
    ctx.strokeStyle = ctx.fillStyle = COLORS[k % COLORS.length];
    ctx.beginPath();
    let started = false;
    s.xs.forEach((x, n) => {
      if (!ok(x, s.ys[n])) return;
      if (started) ctx.lineTo(px(x), py(s.ys[n])); else ctx.moveTo(px(x), py(s.ys[n]));
      started = true;
    });
    ctx.stroke();
    s.xs.forEach((x, n) => { if (ok(x, s.ys[n])) ctx.fillRect(px(x) - 2, py(s.ys[n]) - 2, 4, 4); });
    ctx.fillText(s.label, W - R - 150, T + 14 + 14 * k);
  });
}

function guard(info, fn) {
  try {
    info.classList.remove("err");
    fn();
  } catch (e) {
    info.classList.add("err");
    info.textContent = String(e.message ?? e);
  }
}

function runForward() {
  guard($("f-info"), () => {
    const t0 = performance.now();
    const out = forwardField(Number($("f-m").value), Number($("f-c").value), Number($("f-t").value), Number($("f-b").value));
    const n = out[2];
    const u = out.subarray(3, 3 + n * n);
    const m = out[3 + n * n];
    const dn = out.subarray(4 + n * n, 4 + n * n + m);
    const lin = out.subarray(4 + n * n + m);
    heatmap($("f-field"), n, u);
    const idx = Array.from({ length: m }, (_, k) => k);
    plot($("f-dn"), [
      { label: "nonlinear flux", xs: idx, ys: Array.from(dn) },
      { label: "t x linear flux", xs: idx, ys: Array.from(lin) },
    ], { xlabel: "boundary sample", ylabel: "flux" });
    let gap = 0, total = 0;
    dn.forEach((v, k) => { gap = Math.max(gap, Math.abs(v - lin[k])); });
    for (const v of dn) total += v;
    $("f-info").textContent =
      `Picard iterations   ${out[0]}\nlast update         ${out[1].toExponential(2)}\n` +
      `max |flux - linear| ${gap.toExponential(3)}\nsum of flux samples ${total.toExponential(2)}\n` +
      `time                ${(performance.now() - t0).toFixed(0)} ms`;
  });
}

function runCgo() {
  guard($("c-info"), () => {
    const k = numbers($("c-k").value);
    if (k.length !== 3) throw new Error("k needs three numbers");
    const s = new Float64Array(numbers($("c-s").value));
    const out = cgoConvergence(Number($("c-m").value), coefficients(), k[0], k[1], k[2], Number($("c-i").value), s);
    const count = out[0];
    const xs = Array.from(out.subarray(1, 1 + count));
    const gaps = Array.from(out.subarray(1 + count, 1 + 2 * count));
    const [extrap, re, im] = out.subarray(1 + 2 * count);
    plot($("c-plot"), [
      { label: "|form(s) - sample|", xs, ys: gaps },
      { label: "slope -2 guide", xs, ys: xs.map((v) => gaps[0] * (xs[0] / v) ** 2) },
    ], { logx: true, logy: true, xlabel: "s", ylabel: "gap" });
    $("c-info").textContent =
      `Fourier sample  ${re.toFixed(6)} ${im >= 0 ? "+" : "-"} ${Math.abs(im).toFixed(6)}i\n` +
      xs.map((v, n) => `s = ${String(v).padEnd(6)} gap ${gaps[n].toExponential(3)}`).join("\n") +
      `\nextrapolated    gap ${extrap.toExponential(3)}`;
  });
}

function runSingular() {
  guard($("s-info"), () => {
    const eps = new Float64Array(numbers($("s-e").value));
    const out = singularSweep(coefficients(), Number($("s-s").value), Number($("s-t").value), eps);
    const count = out[0];
    const xs = Array.from(out.subarray(1, 1 + count));
    const series = [];
    let text = "";
    for (let j = 0; j < 3; j++) {
      const base = 1 + count + j * (count + 2);
      const vals = Array.from(out.subarray(base, base + count));
      const limit = out[base + count], exact = out[base + count + 1];
      series.push({ label: `j = ${j + 1}: |value - exact|`, xs, ys: vals.map((v) => Math.abs(v - exact)) });
      text += `j = ${j + 1}  extrapolated ${limit.toFixed(5)}  exact ${exact.toFixed(5)}\n`;
    }
    plot($("s-plot"), series, { logx: true, logy: true, xlabel: "eps", ylabel: "error" });
    $("s-info").textContent = text;
  });
}

await init();
$("f-run").onclick = runForward;
$("c-run").onclick = runCgo;
$("s-run").onclick = runSingular;
$("seed").onchange = () => { runCgo(); runSingular(); };
runForward();
runCgo();
runSingular();
