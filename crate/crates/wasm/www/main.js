import init, { kmap_dimension, classify_planar, saddle_manifolds } from "./pkg/orbitdim_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function plot(r) {
  const c = $("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const xs = r.loglog.map((p) => p[0]);
  const ys = r.loglog.map((p) => p[1]);
  const pad = 40;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (c.width - 2 * pad);
  const sy = (y) => c.height - pad - ((y - y0) / (y1 - y0 || 1)) * (c.height - 2 * pad);

  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, c.width - 2 * pad, c.height - 2 * pad);
  g.fillStyle = "#444";
  g.fillText("ln ε", c.width / 2, c.height - 10);
  g.fillText("ln |S_ε|", 4, pad - 10);

  g.fillStyle = "rgba(40, 100, 200, 0.15)";
  g.fillRect(sx(r.window[0]), pad, sx(r.window[1]) - sx(r.window[0]), c.height - 2 * pad);

  g.fillStyle = "#1a5fb4";
  for (let i = 0; i < xs.length; i++) {
    g.beginPath();
    g.arc(sx(xs[i]), sy(ys[i]), 2.5, 0, 2 * Math.PI);
    g.fill();
  }
}

function runKmap() {
  const r = JSON.parse(kmap_dimension(num("k") | 0, num("kx0"), num("kn") | 0));
  if (r.error) {
    $("kout").innerHTML = `<span class="err">${r.error}</span>`;
    return;
  }
  const tail = r.tail == null ? "n/a" : r.tail.toFixed(4);
  $("kout").textContent =
    `dimension ${r.value.toFixed(4)} (tail exponent ${tail}, predicted 1 − 1/k = ${r.predicted.toFixed(4)}), ` +
    `R² ${r.r_squared.toFixed(5)}, ${r.orbit_length} points`;
  plot(r);
}

function runClassify() {
  const r = JSON.parse(classify_planar($("fx").value, $("fy").value, num("cx0"), num("cy0")));
  if (r.error) {
    $("cout").innerHTML = `<span class="err">${r.error}</span>`;
    return;
  }
  const s = r.spectral;
  const eig = s.spectrum.eigenvalues.map((e) => `${e.re.toFixed(6)}${e.im >= 0 ? "+" : "−"}${Math.abs(e.im).toFixed(6)}i`);
  let text = `spectral verdict: ${s.verdict}\nmultipliers: ${eig.join(", ")}\n`;
  if (r.detector.error) {
    text += `detector: ${r.detector.error}`;
  } else {
    const dims = (r.detector.projective_dimensions || []).map((a) => a.value.toFixed(3));
    text += `detector: ${r.detector.verdict} (projective dimensions ${dims.join(", ")})`;
  }
  $("cout").textContent = text;
}

const NAMES = ["λ1", "λ2", "a1", "a2", "a3", "b1", "b2", "b3"];
const DEFAULTS = [0.5, 2, 0.3, -0.2, 0.4, 1, 0.6, -0.1];

function runManifold() {
  const c = new Float64Array(NAMES.map((_, i) => num(`c${i}`)));
  const r = JSON.parse(saddle_manifolds(c, num("order") | 0));
  if (r.error) {
    $("mout").innerHTML = `<span class="err">${r.error}</span>`;
    return;
  }
  const f = (v) => v.toPrecision(12);
  const cf = r.closed_form;
  $("mout").textContent =
    `stable series   c2..cK: ${r.stable.coefficients.map(f).join(", ")}\n` +
    `closed form     α2, α3: ${f(cf.alpha2)}, ${f(cf.alpha3)}\n` +
    `unstable series c2..cK: ${r.unstable.coefficients.map(f).join(", ")}\n` +
    `closed form     β2, β3: ${f(cf.beta2)}, ${f(cf.beta3)}\n` +
    `restricted map on the stable manifold: ${r.restricted_stable.map(f).join(", ")}\n` +
    `invariance residuals: ${r.stable.residual.toExponential(2)}, ${r.unstable.residual.toExponential(2)}`;
}

await init();
$("coeffs").innerHTML = NAMES.map(
  (n, i) => `<label>${n} <input id="c${i}" type="number" step="0.1" value="${DEFAULTS[i]}"></label>`
).join("");
$("krun").onclick = runKmap;
$("crun").onclick = runClassify;
$("mrun").onclick = runManifold;
runKmap();
