import init, { analyzeChart, geodesicFan, developGrid } from "./pkg/projflat_web.js";

const PRESETS = {
  gnomonic: `# geodesics are straight lines here
dim = 2
domain = -1, 1
[metric]
g 1 1 = (1+x2^2)/(1+x1^2+x2^2)^2
g 1 2 = -x1*x2/(1+x1^2+x2^2)^2
g 2 2 = (1+x1^2)/(1+x1^2+x2^2)^2
`,
  stereo: `dim = 2
domain = -0.6, 0.6
[metric]
g 1 1 = 4/(1+x1^2+x2^2)^2
g 2 2 = 4/(1+x1^2+x2^2)^2
`,
  hyperbolic: `dim = 2
domain = -0.68, 0.68
[metric]
g 1 1 = 4/(1-x1^2-x2^2)^2
g 2 2 = 4/(1-x1^2-x2^2)^2
`,
  curly: `dim = 2
domain = -1, 1
[christoffel]
G 1 2 2 = x1^2
`,
};

const $ = (id) => document.getElementById(id);
const out = $("out");

function show(text, isError = false) {
  out.textContent = text;
  out.className = isError ? "error" : "";
}

function run(f) {
  try {
    f();
  } catch (e) {
    show(String(e), true);
  }
}

// Maps a box [lo, hi]² onto the canvas with a margin.
function view(canvas, lo, hi) {
  const ctx = canvas.getContext("2d");
  const m = 12, w = canvas.width - 2 * m, h = canvas.height - 2 * m;
  const sx = (x) => m + ((x - lo) / (hi - lo)) * w;
  const sy = (y) => m + ((hi - y) / (hi - lo)) * h;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ddd";
  ctx.strokeRect(sx(lo), sy(hi), sx(hi) - sx(lo), sy(lo) - sy(hi));
  return {
    ctx,
    polyline(pts, color) {
      ctx.strokeStyle = color;
      ctx.beginPath();
      let pen = false;
      for (const p of pts) {
        if (!p || !isFinite(p[0]) || !isFinite(p[1])) { pen = false; continue; }
        if (pen) ctx.lineTo(sx(p[0]), sy(p[1])); else ctx.moveTo(sx(p[0]), sy(p[1]));
        pen = true;
      }
      ctx.stroke();
    },
    dot(p, color) {
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(sx(p[0]), sy(p[1]), 4, 0, 2 * Math.PI);
      ctx.fill();
    },
  };
}

function bounds(lines) {
  let lo = Infinity, hi = -Infinity;
  for (const l of lines) for (const p of l) if (p) {
    lo = Math.min(lo, p[0], p[1]);
    hi = Math.max(hi, p[0], p[1]);
  }
  const pad = 0.05 * (hi - lo || 1);
  return [lo - pad, hi + pad];
}

function analyze() {
  const r = JSON.parse(analyzeChart($("chart").value, $("point").value));
  const lines = [`verdict: ${r.verdict}`, `point: (${r.point.join(", ")})`];
  if (r.torsion > 0) lines.push(`|T| = ${r.torsion.toExponential(3)}`);
  for (const [name, v] of r.norms) lines.push(`|${name}| = ${v.toExponential(3)}`);
  show(lines.join("\n"));
}

function fan() {
  const r = JSON.parse(geodesicFan($("chart").value, $("point").value, +$("rays").value, +$("length").value));
  const v = view($("left"), r.domain[0], r.domain[1]);
  r.rays.forEach((ray, i) => v.polyline(ray, `hsl(${(360 * i) / r.rays.length}, 70%, 40%)`));
  v.dot(r.base, "#000");
  $("left-cap").textContent = "geodesics in the chart";
  view($("right"), 0, 1);
  $("right-cap").textContent = "";
  show(`${r.rays.length} geodesics from (${r.base.join(", ")}), clipped to the chart domain`);
}

function grid() {
  const r = JSON.parse(developGrid($("chart").value, $("point").value, +$("lines").value));
  const left = view($("left"), r.domain[0], r.domain[1]);
  const [lo, hi] = bounds(r.image);
  const right = view($("right"), lo, hi);
  r.source.forEach((l, i) => {
    const color = i % 2 ? "#1f5fbf" : "#c0392b";
    left.polyline(l, color);
    right.polyline(r.image[i], color);
  });
  left.dot(r.base, "#000");
  $("left-cap").textContent = "coordinate grid in the chart";
  $("right-cap").textContent = "its image under the developing map";
  show("Geodesics of the chart map to straight lines of RP² under this map.");
}

await init();
$("preset").addEventListener("change", (e) => { $("chart").value = PRESETS[e.target.value]; });
$("chart").value = PRESETS.gnomonic;
$("analyze").addEventListener("click", () => run(analyze));
$("fan").addEventListener("click", () => run(fan));
// Let the status text paint before the blocking call.
$("grid").addEventListener("click", () => { show("developing…"); setTimeout(() => run(grid), 0); });
show("ready");
