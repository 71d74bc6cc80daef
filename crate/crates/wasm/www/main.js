import init, { trial_grid, rate_curve, certify, violation_vs_mu, eberhard } from "./pkg/qrng_wasm.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, xs, ys, { xlog = true, xlabel = "", ylabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 50;
  ctx.clearRect(0, 0, w, h);
  const fx = xlog ? Math.log10 : (x) => x;
  const x0 = fx(xs[0]), x1 = fx(xs[xs.length - 1]);
  const ymin = Math.min(0, ...ys), ymax = Math.max(...ys, 1e-12);
  const px = (x) => pad + ((fx(x) - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - ymin) / (ymax - ymin)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, py(0));
  ctx.lineTo(w - pad, py(0));
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.stroke();

  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(xlabel, w / 2 - 30, h - 12);
  ctx.fillText(ylabel, 6, pad - 12);
  ctx.fillText(ymax.toExponential(2), 4, py(ymax) + 4);
  ctx.fillText(xs[0].toExponential(0), pad - 10, h - pad + 16);
  ctx.fillText(xs[xs.length - 1].toExponential(0), w - pad - 20, h - pad + 16);

  ctx.strokeStyle = "#1565c0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function echo(input) {
  const out = input.parentElement.querySelector("output");
  if (out) out.textContent = input.value;
}

function updateRate() {
  const j = 10 ** Number($("rate-j").value);
  $("rate-j-out").textContent = j.toExponential(3);
  const xs = Array.from(trial_grid(7, 15, 60));
  const ys = Array.from(rate_curve(j, 7, 15, 60));
  plot($("rate-plot"), xs, ys, { xlabel: "trials n", ylabel: "bits per trial" });
  const n = Number($("rate-n").value);
  try {
    const [r, len, , epsC, epsS] = certify(n, j);
    $("rate-readout").textContent =
      `n = ${n.toExponential(2)}: ${r.toExponential(4)} bits/trial, ${len} extractable bits, ` +
      `completeness ${epsC.toExponential(2)}, soundness ${epsS.toExponential(2)}`;
  } catch (e) {
    $("rate-readout").textContent = String(e);
  }
}

function updateMu() {
  const dark = 10 ** Number($("mu-dark").value);
  $("mu-dark").parentElement.querySelector("output").textContent = dark.toExponential(1);
  const lo = 0.001, hi = 1, points = 80;
  try {
    const ys = Array.from(violation_vs_mu(
      Number($("mu-eta-a").value), Number($("mu-eta-b").value), Number($("mu-v").value),
      Number($("mu-r").value), dark, 0.002, $("mu-law").value, lo, hi, points));
    const xs = ys.map((_, k) => lo * (hi / lo) ** (k / (points - 1)));
    plot($("mu-plot"), xs, ys, { xlabel: "mean pairs per pulse", ylabel: "violation J" });
    const best = ys.indexOf(Math.max(...ys));
    $("mu-readout").textContent = `maximum J = ${ys[best].toExponential(3)} at mu = ${xs[best].toFixed(4)}`;
  } catch (e) {
    $("mu-readout").textContent = String(e);
  }
}

function updateEberhard() {
  try {
    const [r, a1, a2, b1, b2, j] = eberhard(Number($("eb-eta").value), Number($("eb-v").value));
    $("eb-readout").textContent = j > 0
      ? `r = ${r.toFixed(4)}, Alice ${a1.toFixed(2)}° / ${a2.toFixed(2)}°, Bob ${b1.toFixed(2)}° / ${b2.toFixed(2)}°, J = ${j.toExponential(4)}`
      : "no violation at this efficiency";
  } catch (e) {
    $("eb-readout").textContent = String(e);
  }
}

await init();
const wire = (ids, update) => {
  for (const id of ids) {
    $(id).addEventListener("input", () => { echo($(id)); update(); });
    echo($(id));
  }
  update();
};
wire(["rate-j", "rate-n"], updateRate);
wire(["mu-eta-a", "mu-eta-b", "mu-v", "mu-r", "mu-dark", "mu-law"], updateMu);
wire(["eb-eta", "eb-v"], updateEberhard);
