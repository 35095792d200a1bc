import init, { delay_curves, tail_exponent_curve, routing_snapshot } from "./pkg/ecdelay_web.js";

const COLORS = ["#1b7", "#27c", "#c42", "#888"];
const num = (id) => Number(document.getElementById(id).value);
const status = (msg) => { document.getElementById("status").textContent = msg; };

function frame(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const pad = 40;
  const finite = (v) => v.filter(Number.isFinite);
  const [x0, x1] = [Math.min(...finite(xs)), Math.max(...finite(xs))];
  const [y0, y1] = [0, Math.max(...finite(ys)) * 1.05 || 1];
  const sx = (x) => pad + (x - x0) / (x1 - x0 || 1) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - (y - y0) / (y1 - y0) * (canvas.height - 2 * pad);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#444";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(x0.toPrecision(3), pad, canvas.height - pad + 14);
  ctx.fillText(x1.toPrecision(3), canvas.width - pad - 20, canvas.height - pad + 14);
  ctx.fillText(y1.toPrecision(3), 4, pad + 4);
  return { ctx, sx, sy };
}

function line(ctx, sx, sy, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  let open = false;
  xs.forEach((x, i) => {
    if (!Number.isFinite(ys[i])) { open = false; return; }
    open ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]));
    open = true;
  });
  ctx.stroke();
}

function columns(flat, width) {
  const cols = Array.from({ length: width }, () => []);
  flat.forEach((v, i) => cols[i % width].push(v));
  return cols;
}

function drawCurves() {
  const m = num("dc-m");
  const rows = delay_curves(m, num("dc-p"), BigInt(num("dc-r")), num("dc-rho"), num("dc-c"),
    BigInt(num("dc-n")), BigInt(num("dc-seed")), 200);
  const [k, ...series] = columns(rows, 5);
  if (k.length === 0) { status("no chunk count had enough samples"); return; }
  const { ctx, sx, sy } = frame(document.getElementById("dc-canvas"), k, series.flat());
  series.forEach((ys, i) => line(ctx, sx, sy, k, ys, COLORS[i]));
}

function drawTail() {
  const [load, q] = columns(tail_exponent_curve(num("tq-sigma"), 60), 2);
  const { ctx, sx, sy } = frame(document.getElementById("tq-canvas"), load, q);
  line(ctx, sx, sy, load, q, COLORS[1]);
}

function drawSnapshot() {
  const m = num("rs-m");
  const rows = routing_snapshot(m, BigInt(num("rs-k")), BigInt(num("rs-r")), 10, 1, BigInt(num("rs-seed")));
  const canvas = document.getElementById("rs-canvas");
  const ctx = canvas.getContext("2d");
  const top = Math.max(...rows);
  const panel = canvas.width / 4;
  const labels = ["before", "WF", "BS", "BR"];
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  labels.forEach((label, p) => {
    const loads = rows.slice(p * m, (p + 1) * m).sort((a, b) => b - a);
    const bar = (panel - 20) / m;
    ctx.fillStyle = p === 0 ? "#999" : COLORS[p - 1];
    loads.forEach((v, i) => {
      const h = v / top * (canvas.height - 40);
      ctx.fillRect(p * panel + 10 + i * bar, canvas.height - 20 - h, Math.max(bar - 1, 1), h);
    });
    ctx.fillStyle = "#222";
    ctx.fillText(`${label} max ${loads[0].toFixed(2)}`, p * panel + 10, 14);
  });
}

function guarded(fn) {
  return () => {
    status("");
    try { fn(); } catch (e) { status(String(e)); }
  };
}

await init();
document.getElementById("dc-run").onclick = guarded(drawCurves);
document.getElementById("tq-run").onclick = guarded(drawTail);
document.getElementById("rs-run").onclick = guarded(drawSnapshot);
guarded(drawTail)();
guarded(drawSnapshot)();
