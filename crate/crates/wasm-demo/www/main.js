import init, { Explorer, fixtureIds } from "./pkg/breakrisk_wasm.js";

const $ = (id) => document.getElementById(id);

const state = {
  explorer: null,
  summary: null,
  source: "mce0",
  mode: "affected-paths",
  selected: new Set(),
  sweepBars: [],
};

function showError(err) {
  $("error").textContent = err ? String(err.message ?? err) : "";
}

function readUrl() {
  const q = new URLSearchParams(location.search);
  if (q.get("fixture")) state.source = q.get("fixture");
  if (q.get("mode")) state.mode = q.get("mode");
  for (const op of (q.get("ops") ?? "").split(",")) {
    if (op.trim()) state.selected.add(op.trim());
  }
}

function writeUrl() {
  const q = new URLSearchParams();
  if (state.source !== null) q.set("fixture", state.source);
  if (state.selected.size) q.set("ops", [...state.selected].sort().join(","));
  q.set("mode", state.mode);
  history.replaceState(null, "", "?" + q.toString().replaceAll("%2C", ","));
}

function load(explorer, source) {
  state.explorer = explorer;
  state.summary = JSON.parse(explorer.summary());
  state.source = source;
  renderOps();
  refresh();
}

function renderOps() {
  const box = $("ops");
  box.replaceChildren();
  const known = new Set(state.summary.operations);
  const labels = [...new Set([...state.summary.operations, ...state.selected])];
  for (const label of labels) {
    const b = document.createElement("button");
    b.textContent = known.has(label) ? label : label + " (never requested)";
    b.className = state.selected.has(label) ? "on" : "";
    b.onclick = () => toggle(label);
    box.append(b);
  }
}

function toggle(label) {
  if (state.selected.has(label)) state.selected.delete(label);
  else state.selected.add(label);
  renderOps();
  refresh();
}

function refresh() {
  writeUrl();
  showError(null);
  let report = null;
  if (state.selected.size) {
    try {
      report = JSON.parse(state.explorer.risk([...state.selected].join(","), state.mode));
    } catch (e) {
      showError(e);
    }
  }
  renderGauge(report);
  renderPaths(report);
  renderSweep();
}

// JSON.parse turns 1.0000 into 1, so the gauge re-renders with four decimals
function renderGauge(report) {
  const total = report ? report.total : 0;
  $("gauge").textContent = total.toFixed(4);
  const all = report && report.per_path.length === state.summary.paths.length;
  const notes = [];
  if (all) notes.push("all paths affected");
  if (report && report.clamped) notes.push("clamped");
  if (report && report.unmatched.length) notes.push("zero-risk, never requested: " + report.unmatched.join(", "));
  $("badge").textContent = notes.join(" · ");
}

function renderPaths(report) {
  const hit = new Map((report ? report.per_path : []).map((p) => [p.path, p.contribution]));
  const rows = state.summary.paths.map((p) => {
    const tr = document.createElement("tr");
    const share = hit.get(p.id) ?? 0;
    if (hit.has(p.id)) tr.className = "hit";
    const bar = document.createElement("span");
    bar.style.width = Math.round(share * 200) + "px";
    const cells = [p.id, p.root, p.weight, share.toFixed(4)].map((v) => {
      const td = document.createElement("td");
      td.textContent = v;
      return td;
    });
    const barCell = document.createElement("td");
    barCell.className = "bar";
    barCell.append(bar);
    tr.append(...cells, barCell);
    return tr;
  });
  $("paths").replaceChildren(...rows);
}

function renderSweep() {
  const canvas = $("sweep");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  state.sweepBars = [];
  if (!state.summary.grand_total) {
    ctx.fillText("empty snapshot", 10, 20);
    return;
  }
  const rows = JSON.parse(state.explorer.sweep(state.mode)).sweep;
  const pad = 30;
  const h = canvas.height - 2 * pad;
  const w = (canvas.width - 2 * pad) / rows.length;
  ctx.font = "11px system-ui";
  ctx.textAlign = "center";
  rows.forEach((r, i) => {
    const x = pad + i * w;
    const bh = r.score * h;
    ctx.fillStyle = state.selected.has(r.operation) ? "#c62828" : "#607d8b";
    ctx.fillRect(x + 4, pad + h - bh, w - 8, bh);
    ctx.fillStyle = "#222";
    ctx.fillText(r.score.toFixed(4), x + w / 2, pad + h - bh - 4);
    ctx.fillText(r.operation, x + w / 2, pad + h + 14);
    state.sweepBars.push({ x0: x, x1: x + w, op: r.operation });
  });
}

function sweepClick(ev) {
  const rect = ev.target.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) * ev.target.width) / rect.width;
  const bar = state.sweepBars.find((b) => x >= b.x0 && x < b.x1);
  if (bar) toggle(bar.op);
}

async function main() {
  await init();
  readUrl();
  const select = $("fixture");
  for (const id of JSON.parse(fixtureIds())) {
    select.append(new Option(id, id));
  }
  select.value = state.source;
  $("mode").value = state.mode;

  select.onchange = () => {
    state.selected.clear();
    load(Explorer.fromFixture(select.value), select.value);
  };
  $("mode").onchange = () => {
    state.mode = $("mode").value;
    refresh();
  };
  $("clear").onclick = () => {
    state.selected.clear();
    renderOps();
    refresh();
  };
  $("load-msp").onclick = () => {
    try {
      state.selected.clear();
      load(Explorer.fromMsp($("msp").value), null);
    } catch (e) {
      showError(e);
    }
  };
  $("sweep").onclick = sweepClick;

  try {
    load(Explorer.fromFixture(state.source), state.source);
  } catch (e) {
    showError(e);
    load(Explorer.fromFixture("mce0"), "mce0");
  }
}

main().catch(showError);
