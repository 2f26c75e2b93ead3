import init, { kernel_heatmap, monotonicity_map_json, mode_test_json } from "./pkg/msdeconv_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(target, err) {
  target.textContent = String(err.message ?? err);
  target.classList.add("error");
}

function ok(target, text) {
  target.textContent = text;
  target.classList.remove("error");
}

// Diverging blue/white/red scale symmetric about zero.
function colour(v, scale) {
  const t = Math.max(-1, Math.min(1, v / scale));
  const a = Math.round(255 * (1 - Math.abs(t)));
  return t >= 0 ? [255, a, a] : [a, a, 255];
}

function drawKernel() {
  const canvas = $("k-canvas");
  const res = 120;
  try {
    const values = kernel_heatmap(num("k-sigma"), num("k-h"), num("k-angle"), res);
    const scale = values.reduce((m, v) => Math.max(m, Math.abs(v)), 0) || 1;
    const ctx = canvas.getContext("2d");
    const img = ctx.createImageData(res, res);
    values.forEach((v, i) => {
      const [r, g, b] = colour(v, scale);
      img.data.set([r, g, b, 255], 4 * i);
    });
    const tmp = new OffscreenCanvas(res, res);
    tmp.getContext("2d").putImageData(img, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
    ok($("k-status"), `max |F| = ${scale.toPrecision(4)} over the support square`);
  } catch (e) {
    fail($("k-status"), e);
  }
}

function drawMap() {
  const status = $("m-status");
  ok(status, "running…");
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const r = JSON.parse(
        monotonicity_map_json($("m-signal").value, num("m-n"), num("m-sigma"), num("m-h"), num("m-dirs"), BigInt(num("m-seed"))),
      );
      $("m-svg").innerHTML = r.svg;
      const ms = Math.round(performance.now() - t0);
      ok(status, `${r.arrows} arrows from ${r.triples} triples, κ_n = ${r.kappa_n.toFixed(3)} (${ms} ms)`);
    } catch (e) {
      fail(status, e);
    }
  }, 10);
}

function runMode() {
  const status = $("t-status");
  ok(status, "running…");
  setTimeout(() => {
    try {
      const r = JSON.parse(
        mode_test_json(
          $("t-signal").value, num("t-n"), num("t-sigma"), num("t-x"), num("t-y"), num("t-h"), num("t-gamma"),
          BigInt(num("t-seed")),
        ),
      );
      const rows = r.rows
        .map((t) => `<tr><td>(${t.location.join(", ")})</td><td>(${t.direction.join(", ")})</td>` +
          `<td>${t.statistic.toFixed(4)}</td><td>${t.critical.toFixed(4)}</td><td>${t.decision}</td></tr>`)
        .join("");
      $("t-table").innerHTML = "<tr><th>t</th><th>s</th><th>T</th><th>critical</th><th>decision</th></tr>" + rows;
      ok(status, `${r.detected ? "mode detected" : "no mode detected"} at (${r.candidate.join(", ")}) with γ = ${r.gamma}`);
    } catch (e) {
      fail(status, e);
    }
  }, 10);
}

await init();
$("load").remove();
for (const id of ["k-sigma", "k-h", "k-angle"]) $(id).addEventListener("input", drawKernel);
$("m-run").addEventListener("click", drawMap);
$("t-run").addEventListener("click", runMode);
drawKernel();
